//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test --release -p irs6d --test acceptance`.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use irs6d::beamformer::solve_beamformer;
use irs6d::channel::{
    build_channels, comm_channel, db_to_linear, linear_to_db, sensing_channels, ula_steering, upa_steering, Scenario,
};
use irs6d::config::Experiment;
use irs6d::geometry::{halfspace_feasible, rotation_matrix, upa_angles, Pose6D, Region};
use irs6d::manifold_pbf::{euclidean_gradient, objective, optimize_pbf, optimize_pbf_multistart, PbfOptions, PbfProblem};
use irs6d::metrics::{correlation, inner_row, PhaseVector};
use irs6d::pso::{run_pso, PoseProblem, SwarmConfig};
use irs6d::runner::{alternate_optimize, median, sweep_elements, sweep_gamma, AoOptions, ResultTable, SolverSettings};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 0;
const REPLICATES: usize = 5;
const SWEEP_NX: [usize; 5] = [4, 8, 12, 14, 16];
const ORDER_NX: [usize; 4] = [4, 8, 12, 16];
const GAMMA_NX: usize = 8;

/// Two median SNRs closer than this are a tie.
const TIE_DB: f64 = 0.01;
const GAP_ORIENT_DB: (f64, f64) = (3.0, 2.0);
const GAP_6D_DB: (f64, f64) = (5.0, 3.0);
const RHO_FLOOR: f64 = 0.95;
const RUN_MONOTONE_SLACK_DB: f64 = 1e-9;
const BF_TOL_DB: f64 = 0.05;
const BF_COMM_REL_TOL: f64 = 1e-6;
const BF_GRID: usize = 2000;
const PBF_TOL_DB: f64 = 0.2;
const PBF_LEVELS: usize = 64;
const GRAD_REL_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
const DRAWS: usize = 1000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Sweeps {
    elements: ResultTable,
    gamma: ResultTable,
}

const SCHEMES: [&str; 4] = ["pbf-only", "orient-pbf", "6d-pbf-r1", "6d-pbf-r2"];

fn run_sweeps() -> Sweeps {
    let exp = Experiment::reference();
    let schemes = exp.all_schemes();
    let t = Instant::now();
    let elements = sweep_elements(&exp, &schemes, &SWEEP_NX, REPLICATES, MASTER_SEED).expect("element sweep");
    eprintln!("element sweep: {} runs in {:.1} s", elements.len(), t.elapsed().as_secs_f64());
    let gammas: Vec<f64> = (0..=7).map(|k| 5.0 * k as f64).collect();
    let t = Instant::now();
    let gamma = sweep_gamma(&exp.with_array(GAMMA_NX, GAMMA_NX), &schemes, &gammas, REPLICATES, MASTER_SEED)
        .expect("gamma sweep");
    eprintln!("gamma sweep: {} cells in {:.1} s", gamma.len(), t.elapsed().as_secs_f64());
    Sweeps { elements, gamma }
}

fn snr_median(table: &ResultTable, scheme: &str, nx: usize, g: f64) -> f64 {
    table.median(scheme, nx, g, |r| if r.feasible { r.snr_s_db } else { f64::NEG_INFINITY })
}

fn criterion_ordering(s: &Sweeps) -> Outcome {
    let g = Scenario::reference().gamma0_db;
    let mut ties = 0;
    let mut negative = Vec::new();
    let mut min_gap = f64::INFINITY;
    for nx in ORDER_NX {
        let m: Vec<f64> = SCHEMES.iter().map(|sc| snr_median(&s.elements, sc, nx, g)).collect();
        for k in 0..3 {
            let gap = m[k + 1] - m[k];
            min_gap = min_gap.min(gap);
            if gap.abs() <= TIE_DB {
                ties += 1;
            } else if gap < 0.0 {
                negative.push(format!("N_x={nx} {}-{}: {gap:.4} dB", SCHEMES[k + 1], SCHEMES[k]));
            }
        }
    }
    outcome(
        negative.is_empty() && ties <= 1,
        format!("ties={ties} (max 1), negative gaps={negative:?}, smallest gap={min_gap:.3e} dB"),
    )
}

fn criterion_gaps(s: &Sweeps) -> Outcome {
    let g = Scenario::reference().gamma0_db;
    let m = |sc: &str| snr_median(&s.elements, sc, 8, g);
    let orient = m("orient-pbf") - m("pbf-only");
    let six = m("6d-pbf-r1") - m("orient-pbf");
    let ok1 = (orient - GAP_ORIENT_DB.0).abs() <= GAP_ORIENT_DB.1;
    let ok2 = (six - GAP_6D_DB.0).abs() <= GAP_6D_DB.1;
    outcome(
        ok1 && ok2,
        format!(
            "orient gap={orient:.4} dB (want {}±{}), 6D gap={six:.4} dB (want {}±{})",
            GAP_ORIENT_DB.0, GAP_ORIENT_DB.1, GAP_6D_DB.0, GAP_6D_DB.1
        ),
    )
}

fn criterion_rho(s: &Sweeps) -> Outcome {
    let g = Scenario::reference().gamma0_db;
    let rho: Vec<f64> = SWEEP_NX.iter().map(|&nx| s.elements.median("6d-pbf-r2", nx, g, |r| r.rho)).collect();
    let monotone = rho.windows(2).all(|w| w[1] >= w[0]);
    let at196 = rho[SWEEP_NX.iter().position(|&n| n == 14).unwrap()];
    outcome(
        monotone && at196 >= RHO_FLOOR,
        format!("median rho over N_x={SWEEP_NX:?}: {rho:.6?}; rho(196)={at196:.6}"),
    )
}

fn criterion_tradeoff(s: &Sweeps) -> Outcome {
    let t = &s.gamma;
    let gammas: Vec<f64> = (0..=7).map(|k| 5.0 * k as f64).collect();
    let mut violations = Vec::new();
    for &g in &gammas {
        let r2 = snr_median(t, "6d-pbf-r2", GAMMA_NX, g);
        let orient = snr_median(t, "orient-pbf", GAMMA_NX, g);
        let fixed = snr_median(t, "pbf-only", GAMMA_NX, g);
        if r2 < orient - TIE_DB || orient < fixed - TIE_DB {
            violations.push(format!("Gamma0={g}: r2={r2:.4} orient={orient:.4} fixed={fixed:.4}"));
        }
    }
    let mut non_monotone = 0;
    for sc in SCHEMES {
        for rep in 0..REPLICATES {
            let curve: Vec<f64> = gammas
                .iter()
                .map(|&g| {
                    let r = t.cell(sc, GAMMA_NX, g).into_iter().find(|r| r.seed == seed_of(t, sc, rep)).unwrap();
                    if r.feasible {
                        r.snr_s_db
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            if curve.windows(2).any(|w| w[1] > w[0] + RUN_MONOTONE_SLACK_DB) {
                non_monotone += 1;
            }
        }
    }
    let infeasible = t.results.iter().filter(|r| !r.feasible).count();
    outcome(
        violations.is_empty() && non_monotone == 0,
        format!(
            "dominance violations={violations:?}, non-monotone runs={non_monotone}, infeasible cells={infeasible}/{}",
            t.len()
        ),
    )
}

fn seed_of(t: &ResultTable, scheme: &str, rep: usize) -> u64 {
    let mut seeds: Vec<u64> = t.results.iter().filter(|r| r.scheme == scheme).map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    seeds[rep]
}

fn criterion_geometry(s: &Sweeps) -> Outcome {
    let sc = Scenario::reference();
    let mid = (sc.p_b + sc.p_t) / 2.0;
    let fixed = Experiment::reference().fixed_pose;
    let d_fixed = (fixed.location - mid).norm();
    let mut medians = Vec::new();
    for name in ["6d-pbf-r1", "6d-pbf-r2"] {
        let d: Vec<f64> = s
            .elements
            .results
            .iter()
            .filter(|r| r.scheme == name)
            .map(|r| (r.pose.location - mid).norm())
            .collect();
        medians.push(median(d));
    }
    let nodes = sc.halfspace_nodes();
    let all: Vec<_> = s.elements.results.iter().chain(s.gamma.results.iter()).collect();
    let feasible = all.iter().filter(|r| halfspace_feasible(&r.pose, &nodes)).count();
    outcome(
        medians.iter().all(|&m| m < d_fixed) && feasible == all.len(),
        format!(
            "median distance r1={:.2} m, r2={:.2} m vs fixed {d_fixed:.2} m; feasible poses {feasible}/{}",
            medians[0],
            medians[1],
            all.len()
        ),
    )
}

fn rand_c(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn rand_vec(n: usize, rng: &mut impl Rng) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| rand_c(rng))
}

fn unit_noise_scenario(gamma0_db: f64) -> Scenario {
    let mut s = Scenario::reference();
    s.p_t_w = 1.0;
    s.sigma_c2_w = 1.0;
    s.sigma_s2_w = 1.0;
    s.gamma0_db = gamma0_db;
    s
}

/// Grid search over `f = sqrt(s) e^{j phi} u1 + sqrt(1-s) u2` on the plane
/// spanned by the two channels, full power.
fn beamformer_grid_oracle(h_st: &DVector<Complex64>, h_c: &DVector<Complex64>, floor: f64) -> f64 {
    let e1 = h_c.conjugate().normalize();
    let hs = h_st.conjugate();
    let proj = e1.dotc(&hs);
    let r = &hs - &e1 * proj;
    let e2 = r.normalize();
    let c1 = h_st.transpose() * &e1;
    let c2 = h_st.transpose() * &e2;
    let (c1, c2) = (c1[0], c2[0]);
    let g_c = h_c.norm_squared();
    let mut best = f64::NEG_INFINITY;
    for i in 0..BF_GRID {
        let s = i as f64 / (BF_GRID - 1) as f64;
        if g_c * s < floor {
            continue;
        }
        let (a, b) = (s.sqrt(), (1.0 - s).sqrt());
        for k in 0..BF_GRID {
            let phi = TAU * k as f64 / BF_GRID as f64;
            let val = (c1 * Complex64::from_polar(a, phi) + c2 * b).norm_sqr();
            best = best.max(val);
        }
    }
    best
}

fn criterion_beamformer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_comm = 0.0_f64;
    let mut active = 0;
    let mut failures = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=16);
        let h_st = rand_vec(n, &mut rng);
        let h_c = rand_vec(n, &mut rng);
        let h_sr2 = rng.gen_range(0.1..4.0);
        let max_db = linear_to_db(h_c.norm_squared());
        let g0 = max_db - rng.gen_range(0.01..15.0);
        let scenario = unit_noise_scenario(g0);
        let sol = solve_beamformer(&h_st, h_sr2, &h_c, &scenario).expect("feasible by construction");
        active += sol.constraint_active as usize;
        let oracle = linear_to_db(h_sr2 * beamformer_grid_oracle(&h_st, &h_c, db_to_linear(g0)));
        let gap = oracle - sol.snr_s_db;
        let comm_short = (db_to_linear(g0) - db_to_linear(sol.snr_c_db)) / db_to_linear(g0);
        worst_gap = worst_gap.max(gap);
        worst_comm = worst_comm.max(comm_short);
        if gap > BF_TOL_DB || comm_short > BF_COMM_REL_TOL || sol.f.as_vector().norm() > 1.0 + 1e-9 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "100 instances ({active} with active floor): worst oracle excess={worst_gap:.2e} dB, worst comm shortfall={worst_comm:.2e}"
        ),
    )
}

fn random_problem(n: usize, n_t: usize, n_r: usize, rng: &mut impl Rng) -> PbfProblem {
    PbfProblem {
        u_c: DMatrix::from_fn(n, n_t, |_, _| rand_c(rng)),
        u_r: DMatrix::from_fn(n_r, n, |_, _| rand_c(rng)),
        u_t: DMatrix::from_fn(n, n_t, |_, _| rand_c(rng)),
        h_bu: rand_vec(n_t, rng),
        hbar_tb: rand_vec(n_r, rng),
        h_bt: rand_vec(n_t, rng),
    }
}

fn q_at(p: &PbfProblem, v: &DVector<Complex64>) -> f64 {
    let ch = p.channels(v);
    -ch.h_r.norm_squared() * inner_row(&ch.h_t, &ch.h_c).norm_sqr()
}

fn criterion_pbf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = PbfOptions {
        restarts: 8,
        ..PbfOptions::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let p = random_problem(2, 4, 4, &mut rng);
        let mut grid = f64::INFINITY;
        for i in 0..PBF_LEVELS {
            for k in 0..PBF_LEVELS {
                let th = [TAU * i as f64 / PBF_LEVELS as f64, TAU * k as f64 / PBF_LEVELS as f64];
                let v = DVector::from_fn(2, |j, _| Complex64::from_polar(1.0, th[j]));
                grid = grid.min(q_at(&p, &v));
            }
        }
        let out = optimize_pbf_multistart(&p, &PhaseVector::ones(2), &opts, &mut rng);
        // shortfall of |Q| relative to the grid optimum, in dB
        worst = worst.max(linear_to_db(grid / out.value));
    }
    outcome(
        worst <= PBF_TOL_DB,
        format!("20 instances, worst shortfall vs {PBF_LEVELS}-level grid={worst:.4} dB (max {PBF_TOL_DB})"),
    )
}

fn criterion_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    for n in [2, 4, 8, 16] {
        for _ in 0..20 {
            let p = random_problem(n, 8, 8, &mut rng);
            let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
            let v = PhaseVector::from_phases(&theta);
            let vd = DVector::from_column_slice(v.as_slice());
            let g = euclidean_gradient(&p, &v);
            let fd = DVector::from_fn(n, |i, _| {
                let diff = |dir: Complex64| {
                    let mut plus = vd.clone();
                    let mut minus = vd.clone();
                    plus[i] += dir * FD_STEP;
                    minus[i] -= dir * FD_STEP;
                    (q_at(&p, &plus) - q_at(&p, &minus)) / (2.0 * FD_STEP)
                };
                0.5 * Complex64::new(diff(Complex64::new(1.0, 0.0)), diff(Complex64::new(0.0, 1.0)))
            });
            worst = worst.max((&g - &fd).norm() / g.norm());
        }
    }
    outcome(worst <= GRAD_REL_TOL, format!("80 instances, worst relative error={worst:.2e}"))
}

fn random_pose(region: &Region, rng: &mut impl Rng) -> Pose6D {
    Pose6D::from_array([
        rng.gen_range(region.x_min..=region.x_max),
        rng.gen_range(region.y_min..=region.y_max),
        region.altitude,
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.0..TAU),
    ])
}

fn random_phases(n: usize, rng: &mut impl Rng) -> PhaseVector {
    PhaseVector::from_phases(&(0..n).map(|_| rng.gen_range(0.0..TAU)).collect::<Vec<_>>())
}

fn rank_one(m: &DMatrix<Complex64>) -> bool {
    let sv = m.clone().singular_values();
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.len() < 2 || s[1] <= 1e-9 * s[0]
}

fn non_increasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0])
}

fn small_scenario(rng: &mut impl Rng) -> Scenario {
    let mut s = Scenario::reference();
    s.n_x = rng.gen_range(1..=4);
    s.n_y = rng.gen_range(1..=4);
    s
}

fn criterion_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let exp = Experiment::reference();
    let mut fails: Vec<&str> = Vec::new();
    let mut check = |ok: bool, name: &'static str| {
        if !ok && !fails.contains(&name) {
            fails.push(name);
        }
    };

    for _ in 0..DRAWS {
        let gamma = Vector3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let q = rotation_matrix(&gamma);
        check((q.transpose() * q - Matrix3::identity()).norm() <= 1e-12, "rotation orthogonality");
        check((q.determinant() - 1.0).abs() <= 1e-12, "rotation determinant");
    }

    for _ in 0..DRAWS {
        let mut s = Scenario::reference();
        s.n_x = rng.gen_range(1..=6);
        s.n_y = rng.gen_range(1..=6);
        let pose = random_pose(&exp.region2, &mut rng);
        let cs = build_channels(&s, &pose).unwrap();
        check(rank_one(&cs.h_br) && rank_one(&cs.hbar_rb), "rank-1 surface blocks");
        let n = s.n_elements();
        let v = random_phases(n, &mut rng);
        let sc = sensing_channels(&cs, v.as_slice());
        check(rank_one(&sc.h_s()), "rank-1 sensing channel");

        let ula = ula_steering(rng.gen_range(-1.0..1.0), s.n_t, &s);
        let upa = upa_steering(upa_angles(&pose, &s.p_b, &pose.location).unwrap(), s.n_x, s.n_y, &s);
        let unit = |z: &Complex64| (z.norm() - 1.0).abs() <= 1e-12;
        check(ula.iter().all(unit) && upa.iter().all(unit), "unit-modulus steering");
        check(v.as_slice().iter().all(unit), "unit-modulus phases");

        let w1 = rand_vec(n, &mut rng);
        let w2 = rand_vec(n, &mut rng);
        let a = rng.gen_range(-2.0..2.0);
        let mix: Vec<Complex64> = w1.iter().zip(w2.iter()).map(|(x, y)| x * a + y * (1.0 - a)).collect();
        let lhs = comm_channel(&cs, &mix);
        let rhs = comm_channel(&cs, w1.as_slice()) * Complex64::from(a)
            + comm_channel(&cs, w2.as_slice()) * Complex64::from(1.0 - a);
        check((&lhs - &rhs).norm() <= 1e-12 * (lhs.norm() + rhs.norm()), "channel affinity in v");

        let h_c = comm_channel(&cs, v.as_slice());
        let rho = correlation(&sc.h_st, &h_c).unwrap();
        check((0.0..=1.0).contains(&rho), "rho in [0,1]");
    }

    let pso_cfg = SwarmConfig {
        particles: 8,
        max_iters: 15,
        ..SwarmConfig::default()
    };
    for _ in 0..DRAWS {
        let s = small_scenario(&mut rng);
        let v = random_phases(s.n_elements(), &mut rng);
        let problem = PoseProblem {
            scenario: &s,
            region: exp.region2,
            v_fixed: &v,
        };
        match run_pso(&pso_cfg, &problem, None, &mut rng) {
            Ok(out) => check(non_increasing(&out.trace), "monotone PSO gbest"),
            Err(_) => check(false, "PSO returned a pose"),
        }
    }

    let settings = SolverSettings {
        pso: pso_cfg,
        pbf: PbfOptions {
            restarts: 1,
            max_iters: 60,
            ..PbfOptions::default()
        },
        ao: AoOptions { rounds: 3, tol: 0.0 },
    };
    let schemes = exp.all_schemes();
    for _ in 0..DRAWS {
        let s = small_scenario(&mut rng);
        let scheme = &schemes[rng.gen_range(0..schemes.len())];
        match alternate_optimize(&s, scheme, rng.gen(), &settings) {
            Ok(out) => check(non_increasing(&out.trace), "monotone AO trace"),
            Err(_) => check(false, "AO completed"),
        }
    }

    let opts = PbfOptions {
        max_iters: 100,
        ..PbfOptions::default()
    };
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..=12);
        let p = random_problem(n, 4, 4, &mut rng);
        let out = optimize_pbf(&p, &random_phases(n, &mut rng), &opts);
        check(non_increasing(&out.trace), "monotone Armijo descent");
        check(out.v.as_slice().iter().all(|z| (z.norm() - 1.0).abs() <= 1e-12), "unit-modulus PBF output");
        check((objective(&p, &out.v) - out.value).abs() <= 1e-10 * out.value.abs(), "PBF value consistency");
    }

    outcome(fails.is_empty(), format!("{DRAWS} draws per invariant, failing: {fails:?}"))
}

fn cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_irs6d")).args(args).output().expect("spawn CLI");
    assert!(out.status.success(), "CLI {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("irs6d-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let scenario = dir.join("scenario.json");
    let first = cli(&["default-scenario"]);
    let same_json = first == cli(&["default-scenario"]);
    std::fs::write(&scenario, &first).unwrap();
    let sc = scenario.to_str().unwrap();

    let commands: [(&str, Vec<&str>); 3] = [
        ("run", vec!["run", "--scenario", sc, "--scheme", "6d-pbf-r2", "--seed", "11"]),
        ("sweep-elements", vec!["sweep-elements", "--scenario", sc, "--nx", "2,3", "--seeds", "2", "--seed", "5"]),
        ("sweep-gamma", vec!["sweep-gamma", "--scenario", sc, "--gamma", "-5..15:10", "--seeds", "2", "--seed", "5"]),
    ];
    let mut differing = Vec::new();
    for (name, args) in commands {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let path = dir.join(format!("{name}-{k}.csv"));
            let mut a = args.clone();
            let p = path.to_str().unwrap().to_string();
            a.extend(["--out", p.as_str()]);
            cli(&a);
            bytes.push(std::fs::read(&path).unwrap());
        }
        if bytes[0] != bytes[1] || bytes[0].is_empty() {
            differing.push(name);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    outcome(
        same_json && differing.is_empty(),
        format!("run, sweep-elements, sweep-gamma, default-scenario twice each; differing outputs: {differing:?}"),
    )
}

fn main() {
    let sweeps = run_sweeps();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 scheme ordering", Box::new(|| criterion_ordering(&sweeps))),
        ("2 gap magnitudes", Box::new(|| criterion_gaps(&sweeps))),
        ("3 correlation saturation", Box::new(|| criterion_rho(&sweeps))),
        ("4 trade-off dominance", Box::new(|| criterion_tradeoff(&sweeps))),
        ("5 geometry and feasibility", Box::new(|| criterion_geometry(&sweeps))),
        ("6 beamformer oracle", Box::new(criterion_beamformer)),
        ("7 phase oracle", Box::new(criterion_pbf_oracle)),
        ("8 gradient check", Box::new(criterion_gradient)),
        ("9 structural invariants", Box::new(criterion_invariants)),
        ("10 CLI determinism", Box::new(criterion_determinism)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += !o.pass as usize;
        println!(
            "{} criterion {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
