//! Line-of-sight channel synthesis for the BS, UE, target and the
//! UAV-mounted reflecting surface.
//!
//! Row channels (`1 x N_t`, `1 x N`) are stored as column vectors of their
//! entries; `h * f` is then `h.transpose() * f` (no conjugation).

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{incidence_angle, upa_angles, Pose6D, Region, UpaAngles};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Which path-loss exponent a link uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    /// B-T, B-R, R-T.
    Sensing,
    /// B-U, R-U.
    Comm,
}

/// Full experiment configuration: node positions, arrays, RF and power constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub p_b: Vector3<f64>,
    pub p_u: Vector3<f64>,
    pub p_t: Vector3<f64>,
    pub n_t: usize,
    pub n_r: usize,
    pub n_x: usize,
    pub n_y: usize,
    carrier_hz: f64,
    wavelength: f64,
    /// Linear path gain at 1 m.
    pub beta0: f64,
    pub eta_sensing: f64,
    pub eta_comm: f64,
    /// Element spacing as a fraction of the wavelength (BS arrays and surface).
    pub spacing_wavelengths: f64,
    pub p_t_w: f64,
    pub sigma_c2_w: f64,
    pub sigma_s2_w: f64,
    pub gamma0_db: f64,
    pub region: Region,
}

impl Scenario {
    /// Reference setup: 32/32 BS antennas, 4x4 surface at 150 m, 3.6 GHz,
    /// UE at (280, 0, 0), target at (0, 20, 0), exponents 2.2 / 3.
    pub fn reference() -> Self {
        let carrier_hz = 3.6e9;
        Scenario {
            p_b: Vector3::zeros(),
            p_u: Vector3::new(280.0, 0.0, 0.0),
            p_t: Vector3::new(0.0, 20.0, 0.0),
            n_t: 32,
            n_r: 32,
            n_x: 4,
            n_y: 4,
            carrier_hz,
            wavelength: SPEED_OF_LIGHT / carrier_hz,
            beta0: 1e-3,
            eta_sensing: 2.2,
            eta_comm: 3.0,
            spacing_wavelengths: 0.5,
            p_t_w: 1.0,
            sigma_c2_w: 1e-11,
            sigma_s2_w: 1e-11,
            gamma0_db: 10.0,
            region: Region {
                x_min: 50.0,
                x_max: 100.0,
                y_min: 50.0,
                y_max: 100.0,
                altitude: 150.0,
            },
        }
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn set_carrier_hz(&mut self, f_c: f64) {
        self.carrier_hz = f_c;
        self.wavelength = SPEED_OF_LIGHT / f_c;
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn n_elements(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn gamma0_linear(&self) -> f64 {
        db_to_linear(self.gamma0_db)
    }

    pub fn eta(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Sensing => self.eta_sensing,
            LinkClass::Comm => self.eta_comm,
        }
    }

    /// Nodes that must lie in front of the reflecting face: BS, UE, target.
    pub fn halfspace_nodes(&self) -> [Vector3<f64>; 3] {
        [self.p_b, self.p_u, self.p_t]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_t == 0 || self.n_r == 0 || self.n_x == 0 || self.n_y == 0 {
            return bad("array sizes must be at least 1");
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return bad("carrier frequency must be positive");
        }
        if !(self.beta0 > 0.0) {
            return bad("beta0 must be positive");
        }
        if !(self.eta_sensing >= 2.0 && self.eta_comm >= 2.0) {
            return bad("path-loss exponents must be >= 2");
        }
        if !(self.p_t_w > 0.0 && self.sigma_c2_w > 0.0 && self.sigma_s2_w > 0.0) {
            return bad("powers must be positive");
        }
        if !(self.spacing_wavelengths > 0.0) {
            return bad("element spacing must be positive");
        }
        if !self.gamma0_db.is_finite() {
            return bad("Gamma0_dB must be finite");
        }
        self.region.validate()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Complex LoS gain `sqrt(beta0 d^-eta) exp(-j 2 pi d / lambda)`.
pub fn path_gain(p_i: &Vector3<f64>, p_j: &Vector3<f64>, eta: f64, scenario: &Scenario) -> Result<Complex64> {
    let d = (p_j - p_i).norm();
    if d == 0.0 || !d.is_finite() {
        return Err(Error::CoincidentNodes);
    }
    let mag = (scenario.beta0 * d.powf(-eta)).sqrt();
    Ok(Complex64::from_polar(mag, -2.0 * PI * d / scenario.wavelength()))
}

/// ULA response `[1, e^{j k cos}, ..., e^{j k (n-1) cos}]`, `k = 2 pi d / lambda`.
pub fn ula_steering(cos_angle: f64, n: usize, scenario: &Scenario) -> DVector<Complex64> {
    let phase = 2.0 * PI * scenario.spacing_wavelengths * cos_angle;
    DVector::from_iterator(n, (0..n).map(|k| Complex64::from_polar(1.0, phase * k as f64)))
}

/// UPA response: x-axis factor Kronecker y-axis factor, so element
/// `kx * n_y + ky` carries `x[kx] * y[ky]`.
pub fn upa_steering(angles: UpaAngles, n_x: usize, n_y: usize, scenario: &Scenario) -> DVector<Complex64> {
    let k = 2.0 * PI * scenario.spacing_wavelengths;
    let se = angles.elevation.sin();
    let ux = k * se * angles.azimuth.cos();
    let uy = k * se * angles.azimuth.sin();
    DVector::from_iterator(
        n_x * n_y,
        (0..n_x).flat_map(|kx| {
            (0..n_y).map(move |ky| Complex64::from_polar(1.0, ux * kx as f64 + uy * ky as f64))
        }),
    )
}

/// Cosine aperture factor. Inputs are angles from the outward normal;
/// anything beyond grazing contributes zero.
pub fn aperture_gain(theta_in: f64, theta_ref: f64) -> f64 {
    let c = |t: f64| t.abs().min(FRAC_PI_2).cos().max(0.0);
    c(theta_in) * c(theta_ref)
}

/// Every pose-dependent LoS block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS -> UE, `1 x N_t`.
    pub h_bu: DVector<Complex64>,
    /// BS -> surface, `N x N_t`.
    pub h_br: DMatrix<Complex64>,
    /// Surface -> UE, `1 x N`.
    pub h_ru: DVector<Complex64>,
    /// BS -> target, `1 x N_t`.
    pub h_bt: DVector<Complex64>,
    /// Surface -> target, `1 x N`.
    pub h_rt: DVector<Complex64>,
    /// Target -> BS receive array, `N_r`.
    pub hbar_tb: DVector<Complex64>,
    /// Target -> surface, `N`.
    pub hbar_tr: DVector<Complex64>,
    /// Surface -> BS receive array, `N_r x N`.
    pub hbar_rb: DMatrix<Complex64>,
    pub f_cu: f64,
    pub f_st: f64,
    pub f_sr: f64,
}

fn ula_cos(from: &Vector3<f64>, to: &Vector3<f64>) -> f64 {
    let diff = to - from;
    (diff.z / diff.norm()).clamp(-1.0, 1.0)
}

/// Synthesizes all channel blocks at `pose`. Total in the pose: infeasible
/// orientations are allowed (their aperture gains simply clamp to zero).
pub fn build_channels(scenario: &Scenario, pose: &Pose6D) -> Result<ChannelSet> {
    let (b, u, t, r) = (&scenario.p_b, &scenario.p_u, &scenario.p_t, &pose.location);
    let (n_x, n_y) = (scenario.n_x, scenario.n_y);
    let eta_s = scenario.eta(LinkClass::Sensing);
    let eta_c = scenario.eta(LinkClass::Comm);

    let alpha_bu = path_gain(b, u, eta_c, scenario)?;
    let alpha_br = path_gain(b, r, eta_s, scenario)?;
    let alpha_ru = path_gain(r, u, eta_c, scenario)?;
    let alpha_bt = path_gain(b, t, eta_s, scenario)?;
    let alpha_rt = path_gain(r, t, eta_s, scenario)?;

    let a_bu = ula_steering(ula_cos(b, u), scenario.n_t, scenario);
    let a_br = ula_steering(ula_cos(b, r), scenario.n_t, scenario);
    let a_bt = ula_steering(ula_cos(b, t), scenario.n_t, scenario);
    let abar_tb = ula_steering(ula_cos(t, b), scenario.n_r, scenario);
    let abar_rb = ula_steering(ula_cos(r, b), scenario.n_r, scenario);

    let at_br = upa_steering(upa_angles(pose, b, r)?, n_x, n_y, scenario);
    let at_ru = upa_steering(upa_angles(pose, r, u)?, n_x, n_y, scenario);
    let at_rt = upa_steering(upa_angles(pose, r, t)?, n_x, n_y, scenario);
    let at_tr = upa_steering(upa_angles(pose, t, r)?, n_x, n_y, scenario);
    let at_rb = upa_steering(upa_angles(pose, r, b)?, n_x, n_y, scenario);

    let inc_b = incidence_angle(pose, b)?;
    let inc_u = incidence_angle(pose, u)?;
    let inc_t = incidence_angle(pose, t)?;

    Ok(ChannelSet {
        h_bu: a_bu * alpha_bu,
        h_br: (at_br * a_br.transpose()) * alpha_br,
        h_ru: at_ru * alpha_ru,
        h_bt: a_bt * alpha_bt,
        h_rt: at_rt * alpha_rt,
        hbar_tb: abar_tb * alpha_bt,
        hbar_tr: at_tr * alpha_rt,
        hbar_rb: (abar_rb * at_rb.transpose()) * alpha_br,
        f_cu: aperture_gain(inc_b, inc_u),
        f_st: aperture_gain(inc_b, inc_t),
        f_sr: aperture_gain(inc_b, inc_t),
    })
}

impl ChannelSet {
    pub fn n_elements(&self) -> usize {
        self.h_ru.len()
    }
}

fn check_len(cs: &ChannelSet, v: &[Complex64]) {
    assert_eq!(v.len(), cs.n_elements(), "phase vector length must match the surface size");
}

/// `h_c = h_BU + sqrt(F_cu) h_RU diag(v) H_BR`.
pub fn comm_channel(cs: &ChannelSet, v: &[Complex64]) -> DVector<Complex64> {
    check_len(cs, v);
    let w = DVector::from_iterator(v.len(), cs.h_ru.iter().zip(v).map(|(h, p)| h * p));
    &cs.h_bu + cs.h_br.tr_mul(&w) * Complex64::from(cs.f_cu.sqrt())
}

/// Transmit sensing row, receive sensing column, and their rank-1 product.
#[derive(Debug, Clone)]
pub struct SensingChannels {
    pub h_st: DVector<Complex64>,
    pub h_sr: DVector<Complex64>,
}

impl SensingChannels {
    /// `H_s = h_sr h_st`, `N_r x N_t`.
    pub fn h_s(&self) -> DMatrix<Complex64> {
        &self.h_sr * self.h_st.transpose()
    }
}

pub fn transmit_sensing_channel(cs: &ChannelSet, v: &[Complex64]) -> DVector<Complex64> {
    check_len(cs, v);
    let w = DVector::from_iterator(v.len(), cs.h_rt.iter().zip(v).map(|(h, p)| h * p));
    &cs.h_bt + cs.h_br.tr_mul(&w) * Complex64::from(cs.f_st.sqrt())
}

pub fn receive_sensing_channel(cs: &ChannelSet, v: &[Complex64]) -> DVector<Complex64> {
    check_len(cs, v);
    let w = DVector::from_iterator(v.len(), cs.hbar_tr.iter().zip(v).map(|(h, p)| h * p));
    &cs.hbar_tb + (&cs.hbar_rb * w) * Complex64::from(cs.f_sr.sqrt())
}

pub fn sensing_channels(cs: &ChannelSet, v: &[Complex64]) -> SensingChannels {
    SensingChannels {
        h_st: transmit_sensing_channel(cs, v),
        h_sr: receive_sensing_channel(cs, v),
    }
}
