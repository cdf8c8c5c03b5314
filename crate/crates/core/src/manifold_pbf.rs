//! Passive beamforming: minimize `Q(v) = -||h_r||^2 |h_t h_c^H|^2` over the
//! product of complex unit circles by Riemannian gradient descent with
//! Armijo backtracking.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::metrics::{inner_row, PhaseVector};

/// Affine maps of the three channels in `v`:
/// `h_c = h_BU + v^T U_c`, `h_r = hbar_TB + U_r v`, `h_t = h_BT + v^T U_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PbfProblem {
    /// `N x N_t`.
    pub u_c: DMatrix<Complex64>,
    /// `N_r x N`.
    pub u_r: DMatrix<Complex64>,
    /// `N x N_t`.
    pub u_t: DMatrix<Complex64>,
    pub h_bu: DVector<Complex64>,
    pub hbar_tb: DVector<Complex64>,
    pub h_bt: DVector<Complex64>,
}

fn scale_rows(d: &DVector<Complex64>, m: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i] * s;
    }
    out
}

pub fn assemble_pbf(cs: &ChannelSet) -> PbfProblem {
    let mut u_r = cs.hbar_rb.clone();
    let sr = cs.f_sr.sqrt();
    for (j, mut col) in u_r.column_iter_mut().enumerate() {
        col *= cs.hbar_tr[j] * sr;
    }
    PbfProblem {
        u_c: scale_rows(&cs.h_ru, &cs.h_br, cs.f_cu.sqrt()),
        u_r,
        u_t: scale_rows(&cs.h_rt, &cs.h_br, cs.f_st.sqrt()),
        h_bu: cs.h_bu.clone(),
        hbar_tb: cs.hbar_tb.clone(),
        h_bt: cs.h_bt.clone(),
    }
}

/// The three channels at one `v`.
#[derive(Debug, Clone)]
pub struct PbfChannels {
    pub h_c: DVector<Complex64>,
    pub h_r: DVector<Complex64>,
    pub h_t: DVector<Complex64>,
}

impl PbfProblem {
    pub fn n_elements(&self) -> usize {
        self.u_c.nrows()
    }

    pub fn channels(&self, v: &DVector<Complex64>) -> PbfChannels {
        PbfChannels {
            h_c: &self.h_bu + self.u_c.tr_mul(v),
            h_r: &self.hbar_tb + &self.u_r * v,
            h_t: &self.h_bt + self.u_t.tr_mul(v),
        }
    }

    fn value_at(&self, v: &DVector<Complex64>) -> f64 {
        let ch = self.channels(v);
        -ch.h_r.norm_squared() * inner_row(&ch.h_t, &ch.h_c).norm_sqr()
    }
}

fn to_dvector(v: &PhaseVector) -> DVector<Complex64> {
    DVector::from_column_slice(v.as_slice())
}

pub fn objective(problem: &PbfProblem, v: &PhaseVector) -> f64 {
    problem.value_at(&to_dvector(v))
}

fn gradient_at(problem: &PbfProblem, v: &DVector<Complex64>) -> DVector<Complex64> {
    let ch = problem.channels(v);
    let a = inner_row(&ch.h_t, &ch.h_c);
    let b = ch.h_r.norm_squared();
    // d a / d conj(v) = conj(U_c) h_t ; d conj(a) / d conj(v) = conj(U_t) h_c
    let da = (&problem.u_c * ch.h_t.conjugate()).conjugate();
    let dac = (&problem.u_t * ch.h_c.conjugate()).conjugate();
    let db = problem.u_r.ad_mul(&ch.h_r);
    let mut g = db * Complex64::from(a.norm_sqr());
    g += (da * a.conj() + dac * a) * Complex64::from(b);
    -g
}

/// Wirtinger gradient `dQ/d conj(v)`. For real perturbations
/// `dQ = 2 Re(sum conj(g_i) dv_i)`.
pub fn euclidean_gradient(problem: &PbfProblem, v: &PhaseVector) -> DVector<Complex64> {
    gradient_at(problem, &to_dvector(v))
}

/// Projection onto the tangent space of the unit-circle product at `v`.
pub fn tangent_project(v: &[Complex64], egrad: &DVector<Complex64>) -> DVector<Complex64> {
    DVector::from_iterator(
        v.len(),
        v.iter().zip(egrad.iter()).map(|(vi, gi)| gi - vi * (gi * vi.conj()).re),
    )
}

fn retract(v: &[Complex64], dir: &DVector<Complex64>, step: f64) -> Option<Vec<Complex64>> {
    let mut out = Vec::with_capacity(v.len());
    for (vi, di) in v.iter().zip(dir.iter()) {
        let z = vi - di * step;
        let r = z.norm();
        if !(r > 0.0) || !r.is_finite() {
            return None;
        }
        out.push(z / r);
    }
    Some(out)
}

/// Moves `v` along `-rgrad` by `step` and renormalizes each entry. A step that
/// lands on the origin is halved, at most 30 times.
pub fn riemannian_step(v: &PhaseVector, egrad: &DVector<Complex64>, step: f64) -> PhaseVector {
    let rgrad = tangent_project(v.as_slice(), egrad);
    let mut t = step;
    for _ in 0..30 {
        if let Some(out) = retract(v.as_slice(), &rgrad, t) {
            return PhaseVector::normalized(out);
        }
        t *= 0.5;
    }
    v.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PbfOptions {
    /// Random restarts on top of the warm start.
    pub restarts: usize,
    /// Stop when `||rgrad|| <= tol * |Q|`.
    pub tol: f64,
    pub max_iters: usize,
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
}

impl Default for PbfOptions {
    fn default() -> Self {
        PbfOptions {
            restarts: 4,
            tol: 1e-6,
            max_iters: 500,
            initial_step: 1.0,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbfOutcome {
    pub v: PhaseVector,
    pub value: f64,
    /// Objective after every accepted iterate, starting from the initial point.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

const MAX_BACKTRACKS: usize = 60;

/// Single descent trajectory from `v0`.
///
/// Steps are measured in radians of the largest per-element tangent move, so
/// the initial trial step is independent of the channel scale. The first
/// iteration tries `initial_step`; later ones start from twice the last
/// accepted step (capped at `initial_step`) and contract until Armijo holds.
pub fn optimize_pbf(problem: &PbfProblem, v0: &PhaseVector, opts: &PbfOptions) -> PbfOutcome {
    let mut v: Vec<Complex64> = PhaseVector::normalized(v0.as_slice().to_vec()).as_slice().to_vec();
    let mut value = problem.value_at(&DVector::from_column_slice(&v));
    let mut trace = vec![value];
    let mut step = opts.initial_step;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        let vd = DVector::from_column_slice(&v);
        let rgrad = tangent_project(&v, &gradient_at(problem, &vd));
        let gnorm = rgrad.norm();
        if gnorm <= opts.tol * value.abs() || gnorm == 0.0 {
            break;
        }
        let scale = rgrad.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        // dQ/dt along -rgrad is -2 ||rgrad||^2 per unit of raw step
        let slope = 2.0 * gnorm * gnorm / scale;

        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            if let Some(cand) = retract(&v, &rgrad, t / scale) {
                let q = problem.value_at(&DVector::from_column_slice(&cand));
                if q <= value - opts.sufficient_decrease * t * slope {
                    accepted = Some((cand, q));
                    break;
                }
            }
            t *= opts.contraction;
        }
        let Some((cand, q)) = accepted else { break };
        v = cand;
        value = q;
        trace.push(value);
        iterations += 1;
        step = (2.0 * t).min(opts.initial_step);
    }

    PbfOutcome {
        v: PhaseVector::normalized(v),
        value,
        trace,
        iterations,
    }
}

/// Descent from `warm` plus `opts.restarts` uniformly random starts; the best
/// final objective wins, so the result is never worse than `warm`'s run.
pub fn optimize_pbf_multistart<R: Rng>(
    problem: &PbfProblem,
    warm: &PhaseVector,
    opts: &PbfOptions,
    rng: &mut R,
) -> PbfOutcome {
    let n = problem.n_elements();
    let mut best = optimize_pbf(problem, warm, opts);
    for _ in 0..opts.restarts {
        let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let out = optimize_pbf(problem, &PhaseVector::from_phases(&theta), opts);
        if out.value < best.value {
            best = out;
        }
    }
    best
}
