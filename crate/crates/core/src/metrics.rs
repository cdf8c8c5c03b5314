//! SNRs, S&C channel correlation, the stage-one fitness and the PSO penalty.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::{build_channels, comm_channel, sensing_channels, ChannelSet, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{halfspace_violations, Pose6D};

/// Unit-modulus reflection coefficients of the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<Complex64>);

pub const UNIT_MODULUS_TOL: f64 = 1e-9;

impl PhaseVector {
    pub fn ones(n: usize) -> Self {
        PhaseVector(vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn from_phases(theta: &[f64]) -> Self {
        PhaseVector(theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect())
    }

    /// Accepts `v` only if every entry is unit-modulus within [`UNIT_MODULUS_TOL`].
    pub fn new(v: Vec<Complex64>) -> Result<Self> {
        if v.iter().any(|z| (z.norm() - 1.0).abs() > UNIT_MODULUS_TOL) {
            return Err(Error::InvalidConfig("phase vector entries must be unit-modulus".into()));
        }
        Ok(PhaseVector(v))
    }

    /// Projects arbitrary nonzero entries onto the unit circle; zeros map to 1.
    pub fn normalized(v: Vec<Complex64>) -> Self {
        PhaseVector(
            v.into_iter()
                .map(|z| {
                    let r = z.norm();
                    if r > 0.0 {
                        z / r
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }
}

/// Transmit beamformer with `||f|| <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(DVector<Complex64>);

impl Beamformer {
    pub fn new(f: DVector<Complex64>) -> Result<Self> {
        if f.norm() > 1.0 + 1e-9 {
            return Err(Error::InvalidConfig("beamformer norm exceeds 1".into()));
        }
        Ok(Beamformer(f))
    }

    /// `h^H / ||h||`.
    pub fn matched(h: &DVector<Complex64>) -> Result<Self> {
        let n = h.norm();
        if n == 0.0 {
            return Err(Error::ZeroChannel);
        }
        Ok(Beamformer(h.conjugate() / Complex64::from(n)))
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }
}

/// `h f` for a row channel stored as a vector.
pub fn apply_row(h: &DVector<Complex64>, f: &DVector<Complex64>) -> Complex64 {
    h.iter().zip(f.iter()).map(|(a, b)| a * b).sum()
}

/// `a b^H`.
pub fn inner_row(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    b.dotc(a)
}

pub fn snr_c(cs: &ChannelSet, v: &PhaseVector, f: &Beamformer, scenario: &Scenario) -> f64 {
    let hc = comm_channel(cs, v.as_slice());
    scenario.p_t_w * apply_row(&hc, f.as_vector()).norm_sqr() / scenario.sigma_c2_w
}

pub fn snr_s(cs: &ChannelSet, v: &PhaseVector, f: &Beamformer, scenario: &Scenario) -> f64 {
    let sc = sensing_channels(cs, v.as_slice());
    scenario.p_t_w * sc.h_sr.norm_squared() * apply_row(&sc.h_st, f.as_vector()).norm_sqr() / scenario.sigma_s2_w
}

/// `|a b^H| / (||a|| ||b||)` between two row channels.
pub fn correlation(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok((inner_row(a, b).norm() / (na * nb)).min(1.0))
}

/// Correlation between the transmit sensing channel and the communication channel.
pub fn correlation_rho(cs: &ChannelSet, v: &PhaseVector) -> Result<f64> {
    let hc = comm_channel(cs, v.as_slice());
    let hst = sensing_channels(cs, v.as_slice()).h_st;
    correlation(&hst, &hc)
}

/// `-||h_sr||^2 |h_st h_c^H|^2`, i.e. `-||H_s h_c^H||^2`.
pub fn fitness(cs: &ChannelSet, v: &PhaseVector) -> f64 {
    let hc = comm_channel(cs, v.as_slice());
    let sc = sensing_channels(cs, v.as_slice());
    -sc.h_sr.norm_squared() * inner_row(&sc.h_st, &hc).norm_sqr()
}

/// Squared half-space violations summed over BS, UE and target.
pub fn violation(pose: &Pose6D, scenario: &Scenario) -> f64 {
    halfspace_violations(pose, &scenario.halfspace_nodes())
        .iter()
        .map(|x| x * x)
        .sum()
}

/// Fitness at `pose` plus `tau * sum_X max(0, -n . u_X)^2`.
pub fn penalty(pose: &Pose6D, v: &PhaseVector, scenario: &Scenario, tau: f64) -> Result<f64> {
    let cs = build_channels(scenario, pose)?;
    Ok(fitness(&cs, v) + tau * violation(pose, scenario))
}
