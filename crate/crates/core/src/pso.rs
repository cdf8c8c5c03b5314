//! Particle swarm search over the surface pose with a quadratic half-space
//! penalty and linearly decaying inertia.
//!
//! Positions are `[x, y, z, gx, gy, gz]`. `x`/`y` are clamped into the movable
//! region, `z` is pinned to the altitude and the Euler angles wrap modulo 2pi.
//! A region collapsed to a point gives an orientation-only search.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{build_channels, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{angle_diff, wrap_angle, Pose6D, Region};
use crate::metrics::{fitness, violation, PhaseVector};

/// How the penalty weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    /// `factor * |fitness of the initial best particle|`, fixed for the run.
    Auto { factor: f64 },
    Fixed { tau: f64 },
}

impl Default for TauMode {
    fn default() -> Self {
        TauMode::Auto { factor: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    #[serde(rename = "M")]
    pub particles: usize,
    #[serde(rename = "T_max")]
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
    pub omega_ini: f64,
    pub omega_end: f64,
    pub tau_mode: TauMode,
    /// Velocity cap per dimension as a fraction of that dimension's range.
    pub v_clamp_fraction: f64,
    /// Draw the attraction weights per dimension instead of per particle.
    pub per_dimension_random: bool,
    /// Relative gbest improvement below which the patience counter runs.
    pub early_stop_tol: f64,
    pub patience: usize,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 50,
            max_iters: 200,
            c1: 1.6,
            c2: 2.0,
            omega_ini: 0.9,
            omega_end: 0.1,
            tau_mode: TauMode::default(),
            v_clamp_fraction: 0.2,
            per_dimension_random: false,
            early_stop_tol: 1e-4,
            patience: 30,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("pso: {m}")));
        if self.particles < 2 {
            return bad("M must be at least 2");
        }
        if self.max_iters < 1 {
            return bad("T_max must be at least 1");
        }
        if !(0.0 <= self.omega_end && self.omega_end <= self.omega_ini) {
            return bad("need 0 <= omega_end <= omega_ini");
        }
        if !(self.v_clamp_fraction > 0.0) {
            return bad("v_clamp_fraction must be positive");
        }
        match self.tau_mode {
            TauMode::Auto { factor } if !(factor > 0.0) => bad("tau factor must be positive"),
            TauMode::Fixed { tau } if !(tau > 0.0) => bad("tau must be positive"),
            _ => Ok(()),
        }
    }
}

/// Inertia weight at iteration `t`, decaying linearly from `omega_ini` at 0
/// to `omega_end` at `T_max`.
pub fn inertia(t: usize, config: &SwarmConfig) -> f64 {
    let tm = config.max_iters as f64;
    let t = (t as f64).min(tm);
    (config.omega_ini - config.omega_end) * ((tm - t) / tm) + config.omega_end
}

/// Pose subproblem with the phase vector held fixed.
#[derive(Debug, Clone, Copy)]
pub struct PoseProblem<'a> {
    pub scenario: &'a Scenario,
    pub region: Region,
    pub v_fixed: &'a PhaseVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Penalized value.
    pub value: f64,
    pub fitness: f64,
    pub violation: f64,
}

impl PoseProblem<'_> {
    pub fn evaluate(&self, pose: &Pose6D, tau: f64) -> Evaluation {
        match build_channels(self.scenario, pose) {
            Ok(cs) => {
                let f = fitness(&cs, self.v_fixed);
                let viol = violation(pose, self.scenario);
                Evaluation {
                    value: f + tau * viol,
                    fitness: f,
                    violation: viol,
                }
            }
            Err(_) => Evaluation {
                value: f64::INFINITY,
                fitness: f64::INFINITY,
                violation: f64::INFINITY,
            },
        }
    }

    fn clamp_limits(&self, config: &SwarmConfig) -> [f64; 6] {
        let r = &self.region;
        let f = config.v_clamp_fraction;
        let a = f * TAU;
        [f * (r.x_max - r.x_min), f * (r.y_max - r.y_min), 0.0, a, a, a]
    }

    /// Projection onto the box: clamp location, pin altitude, wrap angles.
    pub fn project(&self, g: [f64; 6]) -> Pose6D {
        let r = &self.region;
        Pose6D::from_array([
            g[0].clamp(r.x_min, r.x_max),
            g[1].clamp(r.y_min, r.y_max),
            r.altitude,
            wrap_angle(g[3]),
            wrap_angle(g[4]),
            wrap_angle(g[5]),
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub g: Pose6D,
    pub mu: [f64; 6],
    pub pbest: Pose6D,
    pub pbest_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub gbest: Pose6D,
    pub gbest_value: f64,
    pub tau: f64,
    /// Completed iterations.
    pub iteration: usize,
    /// Best raw fitness among feasible positions visited so far.
    pub best_feasible: Option<(Pose6D, f64)>,
    v_clamp: [f64; 6],
}

impl Swarm {
    fn record_feasible(&mut self, pose: &Pose6D, eval: &Evaluation) {
        if eval.violation == 0.0 && eval.fitness.is_finite() {
            match self.best_feasible {
                Some((_, f)) if f <= eval.fitness => {}
                _ => self.best_feasible = Some((*pose, eval.fitness)),
            }
        }
    }
}

/// Random initial swarm. If `incumbent` is given it seeds particle 0, so the
/// initial global best is never worse than the incumbent.
pub fn init_swarm<R: Rng>(
    config: &SwarmConfig,
    problem: &PoseProblem<'_>,
    incumbent: Option<&Pose6D>,
    rng: &mut R,
) -> Result<Swarm> {
    config.validate()?;
    problem.region.validate()?;
    let r = problem.region;
    let v_clamp = problem.clamp_limits(config);

    let draw = |lo: f64, hi: f64, rng: &mut R| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let mut positions = Vec::with_capacity(config.particles);
    let mut velocities = Vec::with_capacity(config.particles);
    for m in 0..config.particles {
        let g = [
            draw(r.x_min, r.x_max, rng),
            draw(r.y_min, r.y_max, rng),
            r.altitude,
            draw(0.0, TAU, rng),
            draw(0.0, TAU, rng),
            draw(0.0, TAU, rng),
        ];
        let mut mu = [0.0; 6];
        for (d, m) in mu.iter_mut().enumerate() {
            *m = draw(-v_clamp[d], v_clamp[d], rng);
        }
        let pose = match (m, incumbent) {
            (0, Some(inc)) => problem.project(inc.to_array()),
            _ => problem.project(g),
        };
        positions.push(pose);
        velocities.push(mu);
    }

    let raw: Vec<Evaluation> = positions.iter().map(|p| problem.evaluate(p, 0.0)).collect();
    let tau = match config.tau_mode {
        TauMode::Fixed { tau } => tau,
        TauMode::Auto { factor } => {
            let best = |feasible_only: bool| {
                raw.iter()
                    .filter(|e| e.fitness.is_finite() && (!feasible_only || e.violation == 0.0))
                    .map(|e| e.fitness)
                    .fold(f64::INFINITY, f64::min)
            };
            let b = if best(true).is_finite() { best(true) } else { best(false) };
            let t = factor * b.abs();
            if t > 0.0 && t.is_finite() {
                t
            } else {
                1.0
            }
        }
    };

    let mut swarm = Swarm {
        particles: Vec::with_capacity(config.particles),
        gbest: positions[0],
        gbest_value: f64::INFINITY,
        tau,
        iteration: 0,
        best_feasible: None,
        v_clamp,
    };
    for ((g, mu), e) in positions.into_iter().zip(velocities).zip(raw) {
        let eval = Evaluation {
            value: e.fitness + tau * e.violation,
            ..e
        };
        swarm.record_feasible(&g, &eval);
        if eval.value < swarm.gbest_value {
            swarm.gbest_value = eval.value;
            swarm.gbest = g;
        }
        swarm.particles.push(Particle {
            g,
            mu,
            pbest: g,
            pbest_value: eval.value,
        });
    }
    Ok(swarm)
}

/// One synchronous iteration: velocities and positions move against the
/// previous global best, then personal and global bests are refreshed.
pub fn step<R: Rng>(swarm: &mut Swarm, config: &SwarmConfig, problem: &PoseProblem<'_>, rng: &mut R) {
    let omega = inertia(swarm.iteration, config);
    let gbest = swarm.gbest.to_array();
    for p in swarm.particles.iter_mut() {
        let g = p.g.to_array();
        let pb = p.pbest.to_array();
        let (mut r1, mut r2) = (rng.gen::<f64>(), rng.gen::<f64>());
        let mut next = [0.0; 6];
        for d in 0..6 {
            if config.per_dimension_random && d > 0 {
                r1 = rng.gen::<f64>();
                r2 = rng.gen::<f64>();
            }
            let (to_p, to_g) = if d >= 3 {
                (angle_diff(g[d], pb[d]), angle_diff(g[d], gbest[d]))
            } else {
                (pb[d] - g[d], gbest[d] - g[d])
            };
            let lim = swarm.v_clamp[d];
            let mu = omega * p.mu[d] + config.c1 * r1 * to_p + config.c2 * r2 * to_g;
            p.mu[d] = mu.clamp(-lim, lim);
            next[d] = g[d] + p.mu[d];
        }
        p.g = problem.project(next);
    }

    let tau = swarm.tau;
    let evals: Vec<Evaluation> = swarm.particles.iter().map(|p| problem.evaluate(&p.g, tau)).collect();
    for (i, eval) in evals.iter().enumerate() {
        let g = swarm.particles[i].g;
        swarm.record_feasible(&g, eval);
        let p = &mut swarm.particles[i];
        if eval.value < p.pbest_value {
            p.pbest_value = eval.value;
            p.pbest = p.g;
        }
        if eval.value < swarm.gbest_value {
            swarm.gbest_value = eval.value;
            swarm.gbest = g;
        }
    }
    swarm.iteration += 1;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    /// Returned pose; always half-space feasible.
    pub pose: Pose6D,
    /// Unpenalized fitness at `pose`.
    pub fitness: f64,
    /// Penalized gbest value after initialization and after every iteration.
    pub trace: Vec<f64>,
    pub tau: f64,
}

/// Full PSO run with early stopping and a feasibility fallback: if the
/// penalized optimum violates the half-space constraint, the best feasible
/// position visited or found by local angle perturbation is returned.
pub fn run_pso<R: Rng>(
    config: &SwarmConfig,
    problem: &PoseProblem<'_>,
    incumbent: Option<&Pose6D>,
    rng: &mut R,
) -> Result<PsoOutcome> {
    let mut swarm = init_swarm(config, problem, incumbent, rng)?;
    let mut trace = vec![swarm.gbest_value];
    for _ in 0..config.max_iters {
        step(&mut swarm, config, problem, rng);
        trace.push(swarm.gbest_value);
        let k = trace.len() - 1;
        if config.patience > 0 && k >= config.patience {
            let old = trace[k - config.patience];
            let new = trace[k];
            if old - new <= config.early_stop_tol * old.abs() {
                break;
            }
        }
    }

    let best = problem.evaluate(&swarm.gbest, swarm.tau);
    if best.violation == 0.0 && best.fitness.is_finite() {
        return Ok(PsoOutcome {
            pose: swarm.gbest,
            fitness: best.fitness,
            trace,
            tau: swarm.tau,
        });
    }

    let mut candidate = swarm.best_feasible;
    let base = swarm.gbest.to_array();
    for k in 0..400 {
        let radius = 0.5 * TAU * 0.99f64.powi(k);
        let mut g = base;
        for a in g.iter_mut().skip(3) {
            *a += rng.gen_range(-radius..=radius);
        }
        let pose = problem.project(g);
        let e = problem.evaluate(&pose, 0.0);
        if e.violation == 0.0 && e.fitness.is_finite() && candidate.map_or(true, |(_, f)| e.fitness < f) {
            candidate = Some((pose, e.fitness));
        }
    }
    match candidate {
        Some((pose, f)) => Ok(PsoOutcome {
            pose,
            fitness: f,
            trace,
            tau: swarm.tau,
        }),
        None => Err(Error::NoFeasiblePose {
            best: swarm.gbest.to_array(),
            violation: best.violation,
        }),
    }
}
