//! Alternating optimization of pose and phases, the two-stage pipeline per
//! scheme, and the element-count / SNR-floor sweeps with CSV export.
//!
//! Seeds: every job derives its RNG seed from the master seed with
//! [`child_seed`], keyed by the scheme name, the surface size `N_x` and the
//! replicate index, so a job's result does not depend on which other jobs run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformer::{solve_beamformer, BfSolution};
use crate::channel::{build_channels, comm_channel, linear_to_db, sensing_channels, Scenario};
use crate::config::Experiment;
use crate::error::{Error, Result};
use crate::geometry::{Pose6D, Region};
use crate::manifold_pbf::{assemble_pbf, optimize_pbf_multistart, PbfOptions};
use crate::metrics::{apply_row, correlation, fitness, Beamformer, PhaseVector};
use crate::pso::{run_pso, PoseProblem, SwarmConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AoOptions {
    pub rounds: usize,
    /// Stop once a round improves the fitness by less than `tol` relative.
    pub tol: f64,
}

impl Default for AoOptions {
    fn default() -> Self {
        AoOptions { rounds: 10, tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverSettings {
    pub pso: SwarmConfig,
    pub pbf: PbfOptions,
    pub ao: AoOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// Fixed location and orientation; phases only.
    PbfOnly { fixed_pose: Pose6D },
    /// Fixed location; orientation and phases.
    OrientPbf { fixed_pose: Pose6D },
    /// Location within `region`, orientation and phases.
    SixDPbf { label: String, region: Region },
}

impl Scheme {
    pub fn name(&self) -> String {
        match self {
            Scheme::PbfOnly { .. } => "pbf-only".into(),
            Scheme::OrientPbf { .. } => "orient-pbf".into(),
            Scheme::SixDPbf { label, .. } => format!("6d-pbf-{label}"),
        }
    }

    fn initial_pose(&self) -> Pose6D {
        match self {
            Scheme::PbfOnly { fixed_pose } | Scheme::OrientPbf { fixed_pose } => *fixed_pose,
            Scheme::SixDPbf { region, .. } => Pose6D::new(region.center(), nalgebra::Vector3::zeros()),
        }
    }

    /// Box searched by PSO, `None` when the pose is frozen.
    fn search_region(&self) -> Option<Region> {
        match self {
            Scheme::PbfOnly { .. } => None,
            Scheme::OrientPbf { fixed_pose } => {
                let p = fixed_pose.location;
                Some(Region {
                    x_min: p.x,
                    x_max: p.x,
                    y_min: p.y,
                    y_max: p.y,
                    altitude: p.z,
                })
            }
            Scheme::SixDPbf { region, .. } => Some(*region),
        }
    }
}

/// Per-round record of one alternating-optimization run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub pso_trace: Vec<f64>,
    pub pbf_trace: Vec<f64>,
    pub fitness: f64,
    pub pose: [f64; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoOutcome {
    pub pose: Pose6D,
    pub v: PhaseVector,
    /// Fitness at the start and after every round.
    pub trace: Vec<f64>,
    pub rounds: Vec<RoundLog>,
}

/// Alternates PSO over the free pose dimensions (phases fixed) with manifold
/// descent over the phases (pose fixed). The incumbent warm-starts both
/// blocks, so the fitness trace never increases.
pub fn alternate_optimize(
    scenario: &Scenario,
    scheme: &Scheme,
    seed: u64,
    settings: &SolverSettings,
) -> Result<AoOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pose = scheme.initial_pose();
    let mut v = PhaseVector::ones(scenario.n_elements());
    let mut value = fitness(&build_channels(scenario, &pose)?, &v);
    let mut trace = vec![value];
    let mut rounds = Vec::new();
    let search = scheme.search_region();

    for round in 1..=settings.ao.rounds {
        let mut pso_trace = Vec::new();
        if let Some(region) = search {
            let problem = PoseProblem {
                scenario,
                region,
                v_fixed: &v,
            };
            let incumbent =
                crate::geometry::halfspace_feasible(&pose, &scenario.halfspace_nodes()).then_some(pose);
            let out = run_pso(&settings.pso, &problem, incumbent.as_ref(), &mut rng)?;
            pso_trace = out.trace;
            pose = out.pose;
        }
        let cs = build_channels(scenario, &pose)?;
        let pbf = optimize_pbf_multistart(&assemble_pbf(&cs), &v, &settings.pbf, &mut rng);
        v = pbf.v;
        let previous = value;
        value = fitness(&cs, &v);
        trace.push(value);
        rounds.push(RoundLog {
            round,
            pso_trace,
            pbf_trace: pbf.trace,
            fitness: value,
            pose: pose.to_array(),
        });
        if previous - value <= settings.ao.tol * previous.abs() {
            break;
        }
    }

    Ok(AoOutcome { pose, v, trace, rounds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: String,
    pub n_x: usize,
    pub n_y: usize,
    pub gamma0_db: f64,
    pub seed: u64,
    pub pose: Pose6D,
    pub v: PhaseVector,
    pub f: Beamformer,
    pub snr_s_db: f64,
    pub snr_c_db: f64,
    pub rho: f64,
    /// False when the SNR floor is unreachable; `f` is then the comm matched
    /// filter and `snr_s_db` is NaN.
    pub feasible: bool,
    pub constraint_active: bool,
    pub fitness_trace: Vec<f64>,
    pub ao_iters: usize,
    pub rounds: Vec<RoundLog>,
}

/// Beamforming stage at a fixed surface configuration.
fn beamform(
    scenario: &Scenario,
    pose: &Pose6D,
    v: &PhaseVector,
) -> Result<(std::result::Result<BfSolution, f64>, f64, DVector<Complex64>)> {
    let cs = build_channels(scenario, pose)?;
    let h_c = comm_channel(&cs, v.as_slice());
    let sc = sensing_channels(&cs, v.as_slice());
    let rho = correlation(&sc.h_st, &h_c)?;
    match solve_beamformer(&sc.h_st, sc.h_sr.norm_squared(), &h_c, scenario) {
        Ok(sol) => Ok((Ok(sol), rho, h_c)),
        Err(Error::BeamformerInfeasible { max_snr_c_db }) => Ok((Err(max_snr_c_db), rho, h_c)),
        Err(e) => Err(e),
    }
}

fn assemble_result(
    scenario: &Scenario,
    scheme: &str,
    seed: u64,
    ao: &AoOutcome,
) -> Result<SchemeResult> {
    let (bf, rho, h_c) = beamform(scenario, &ao.pose, &ao.v)?;
    let (f, snr_s_db, snr_c_db, feasible, active) = match bf {
        Ok(sol) => (sol.f, sol.snr_s_db, sol.snr_c_db, true, sol.constraint_active),
        Err(max_c) => (Beamformer::matched(&h_c)?, f64::NAN, max_c, false, true),
    };
    Ok(SchemeResult {
        scheme: scheme.to_string(),
        n_x: scenario.n_x,
        n_y: scenario.n_y,
        gamma0_db: scenario.gamma0_db,
        seed,
        pose: ao.pose,
        v: ao.v.clone(),
        f,
        snr_s_db,
        snr_c_db,
        rho,
        feasible,
        constraint_active: active,
        fitness_trace: ao.trace.clone(),
        ao_iters: ao.rounds.len(),
        rounds: ao.rounds.clone(),
    })
}

/// Stage one (alternating optimization) followed by the closed-form beamformer.
pub fn run_scheme(scenario: &Scenario, scheme: &Scheme, seed: u64, settings: &SolverSettings) -> Result<SchemeResult> {
    let ao = alternate_optimize(scenario, scheme, seed, settings)?;
    assemble_result(scenario, &scheme.name(), seed, &ao)
}

/// Recomputes `(snr_s_dB, snr_c_dB, rho)` from a result's stored pose, phases
/// and beamformer.
pub fn recompute_metrics(scenario: &Scenario, r: &SchemeResult) -> Result<(f64, f64, f64)> {
    let cs = build_channels(scenario, &r.pose)?;
    let h_c = comm_channel(&cs, r.v.as_slice());
    let sc = sensing_channels(&cs, r.v.as_slice());
    let f = r.f.as_vector();
    let snr_s = scenario.p_t_w * sc.h_sr.norm_squared() * apply_row(&sc.h_st, f).norm_sqr() / scenario.sigma_s2_w;
    let snr_c = scenario.p_t_w * apply_row(&h_c, f).norm_sqr() / scenario.sigma_c2_w;
    Ok((linear_to_db(snr_s), linear_to_db(snr_c), correlation(&sc.h_st, &h_c)?))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

/// `splitmix(splitmix(splitmix(master ^ fnv1a(scheme)) ^ cell) ^ replicate)`.
pub fn child_seed(master: u64, scheme: &str, cell: u64, replicate: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master ^ fnv1a(scheme)) ^ cell) ^ replicate)
}

/// One exported row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    #[serde(rename = "N_x")]
    pub n_x: usize,
    #[serde(rename = "N_y")]
    pub n_y: usize,
    #[serde(rename = "Gamma0_dB")]
    pub gamma0_db: f64,
    pub seed: u64,
    #[serde(rename = "snr_s_dB")]
    pub snr_s_db: f64,
    #[serde(rename = "snr_c_dB")]
    pub snr_c_db: f64,
    pub rho: f64,
    #[serde(rename = "p_R_x")]
    pub p_r_x: f64,
    #[serde(rename = "p_R_y")]
    pub p_r_y: f64,
    #[serde(rename = "p_R_z")]
    pub p_r_z: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_z: f64,
    pub ao_iters: usize,
}

/// Exact header of exported CSV files.
pub const CSV_HEADER: &str = "scheme,N_x,N_y,Gamma0_dB,seed,snr_s_dB,snr_c_dB,rho,p_R_x,p_R_y,p_R_z,gamma_x,gamma_y,gamma_z,ao_iters";

impl ResultRow {
    pub fn from_result(r: &SchemeResult) -> Self {
        let g = r.pose.to_array();
        ResultRow {
            scheme: r.scheme.clone(),
            n_x: r.n_x,
            n_y: r.n_y,
            gamma0_db: r.gamma0_db,
            seed: r.seed,
            snr_s_db: r.snr_s_db,
            snr_c_db: r.snr_c_db,
            rho: r.rho,
            p_r_x: g[0],
            p_r_y: g[1],
            p_r_z: g[2],
            gamma_x: g[3],
            gamma_y: g[4],
            gamma_z: g[5],
            ao_iters: r.ao_iters,
        }
    }

    /// Field-wise equality where NaN matches NaN.
    pub fn same_as(&self, other: &ResultRow) -> bool {
        let eq = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        self.scheme == other.scheme
            && self.n_x == other.n_x
            && self.n_y == other.n_y
            && self.seed == other.seed
            && self.ao_iters == other.ao_iters
            && eq(self.gamma0_db, other.gamma0_db)
            && eq(self.snr_s_db, other.snr_s_db)
            && eq(self.snr_c_db, other.snr_c_db)
            && eq(self.rho, other.rho)
            && eq(self.p_r_x, other.p_r_x)
            && eq(self.p_r_y, other.p_r_y)
            && eq(self.p_r_z, other.p_r_z)
            && eq(self.gamma_x, other.gamma_x)
            && eq(self.gamma_y, other.gamma_y)
            && eq(self.gamma_z, other.gamma_z)
    }
}

/// Collection of sweep results with canonical ordering.
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub results: Vec<SchemeResult>,
    /// Replicate index of each result, parallel to `results`.
    pub replicates: Vec<usize>,
    scheme_order: Vec<String>,
}

impl ResultTable {
    /// Builds a table from `(result, replicate)` pairs, sorted canonically by
    /// scheme (in `scheme_order`), `N_x`, `N_y`, `Gamma0_dB` and replicate.
    pub fn new(entries: Vec<(SchemeResult, usize)>, scheme_order: Vec<String>) -> Self {
        let (results, replicates) = entries.into_iter().unzip();
        let mut t = ResultTable {
            results,
            replicates,
            scheme_order,
        };
        t.sort();
        t
    }

    fn sort(&mut self) {
        let order = self.scheme_order.clone();
        let rank = |s: &str| order.iter().position(|o| o == s).unwrap_or(usize::MAX);
        let mut idx: Vec<usize> = (0..self.results.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ra, rb) = (&self.results[a], &self.results[b]);
            rank(&ra.scheme)
                .cmp(&rank(&rb.scheme))
                .then(ra.n_x.cmp(&rb.n_x))
                .then(ra.n_y.cmp(&rb.n_y))
                .then(ra.gamma0_db.total_cmp(&rb.gamma0_db))
                .then(self.replicates[a].cmp(&self.replicates[b]))
        });
        self.results = idx.iter().map(|&i| self.results[i].clone()).collect();
        self.replicates = idx.iter().map(|&i| self.replicates[i]).collect();
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.results.iter().map(ResultRow::from_result).collect()
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    /// Results of one scheme in one cell (matched on `N_x` and `Gamma0_dB`).
    pub fn cell(&self, scheme: &str, n_x: usize, gamma0_db: f64) -> Vec<&SchemeResult> {
        self.results
            .iter()
            .filter(|r| r.scheme == scheme && r.n_x == n_x && r.gamma0_db == gamma0_db)
            .collect()
    }

    /// Median of `metric` over the replicates of a cell; NaN values are skipped.
    pub fn median(&self, scheme: &str, n_x: usize, gamma0_db: f64, metric: impl Fn(&SchemeResult) -> f64) -> f64 {
        median(self.cell(scheme, n_x, gamma0_db).into_iter().map(metric).filter(|x| !x.is_nan()).collect())
    }

    /// Distinct `(scheme, N_x, Gamma0_dB)` cells in canonical order.
    pub fn cells(&self) -> Vec<(String, usize, f64)> {
        let mut out: Vec<(String, usize, f64)> = Vec::new();
        for r in &self.results {
            if !out.iter().any(|(s, n, g)| *s == r.scheme && *n == r.n_x && *g == r.gamma0_db) {
                out.push((r.scheme.clone(), r.n_x, r.gamma0_db));
            }
        }
        out
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Surface-size sweep with `N_x = N_y`. Jobs run in parallel; every
/// `(scheme, N_x, replicate)` job owns its seed.
pub fn sweep_elements(
    experiment: &Experiment,
    schemes: &[Scheme],
    nx_list: &[usize],
    replicates: usize,
    master_seed: u64,
) -> Result<ResultTable> {
    if schemes.is_empty() || nx_list.is_empty() || replicates == 0 {
        return Err(Error::InvalidConfig("sweep needs schemes, sizes and replicates".into()));
    }
    let jobs: Vec<(usize, usize, usize)> = (0..schemes.len())
        .flat_map(|s| nx_list.iter().flat_map(move |&nx| (0..replicates).map(move |r| (s, nx, r))))
        .collect();
    let results: Result<Vec<(SchemeResult, usize)>> = jobs
        .par_iter()
        .map(|&(s, nx, r)| {
            let scheme = &schemes[s];
            let exp = experiment.with_array(nx, nx);
            let seed = child_seed(master_seed, &scheme.name(), nx as u64, r as u64);
            run_scheme(&exp.scenario, scheme, seed, &exp.settings).map(|res| (res, r))
        })
        .collect();
    Ok(ResultTable::new(results?, schemes.iter().map(Scheme::name).collect()))
}

/// SNR-floor sweep: the surface is optimized once per `(scheme, replicate)`
/// at the experiment's array size, then only the beamformer is re-solved for
/// every `Gamma0_dB`.
pub fn sweep_gamma(
    experiment: &Experiment,
    schemes: &[Scheme],
    gamma_list: &[f64],
    replicates: usize,
    master_seed: u64,
) -> Result<ResultTable> {
    if schemes.is_empty() || gamma_list.is_empty() || replicates == 0 {
        return Err(Error::InvalidConfig("sweep needs schemes, thresholds and replicates".into()));
    }
    let base = &experiment.scenario;
    let jobs: Vec<(usize, usize)> = (0..schemes.len())
        .flat_map(|s| (0..replicates).map(move |r| (s, r)))
        .collect();
    let per_job: Result<Vec<Vec<(SchemeResult, usize)>>> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let scheme = &schemes[s];
            let seed = child_seed(master_seed, &scheme.name(), base.n_x as u64, r as u64);
            let ao = alternate_optimize(base, scheme, seed, &experiment.settings)?;
            gamma_list
                .iter()
                .map(|&g| {
                    let mut sc = base.clone();
                    sc.gamma0_db = g;
                    assemble_result(&sc, &scheme.name(), seed, &ao).map(|res| (res, r))
                })
                .collect()
        })
        .collect();
    let entries = per_job?.into_iter().flatten().collect();
    Ok(ResultTable::new(entries, schemes.iter().map(Scheme::name).collect()))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the table as UTF-8 CSV with LF line endings and [`CSV_HEADER`].
pub fn export_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(true)
        .from_writer(BufWriter::new(file));
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>().map_err(csv_err)
}

/// Writes per-round traces as JSON lines.
pub fn write_traces(table: &ResultTable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in &table.results {
        for round in &r.rounds {
            let line = serde_json::json!({
                "scheme": r.scheme,
                "N_x": r.n_x,
                "N_y": r.n_y,
                "Gamma0_dB": r.gamma0_db,
                "seed": r.seed,
                "round": round,
            });
            writeln!(w, "{line}").map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}
