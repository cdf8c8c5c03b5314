//! Closed-form transmit beamformer for a rank-1 sensing channel under a
//! communication SNR floor.
//!
//! Maximizing `|h_st f|^2` subject to `|h_c f|^2 >= Gamma0 sigma_c^2 / P_t`
//! and `||f|| <= 1` only involves `span{h_c^H, h_st^H}`. With the orthonormal
//! basis `u1 = h_c^H / ||h_c||`, `u2` (the part of `h_st^H` orthogonal to
//! `u1`) and `f = x1 u1 + x2 u2`, the comm constraint reads `|x1|^2 >= rho_c`
//! and the sensing gain is `|c1 x1 + c2 x2|` with `ci = h_st ui`. The optimum
//! aligns phases and puts `|x1|^2 = max(rho_c, |c1|^2 / ||h_st||^2)`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::{linear_to_db, Scenario};
use crate::error::{Error, Result};
use crate::metrics::{apply_row, inner_row, Beamformer};

#[derive(Debug, Clone, PartialEq)]
pub struct BfSolution {
    pub f: Beamformer,
    pub snr_s_db: f64,
    pub snr_c_db: f64,
    pub constraint_active: bool,
}

/// `rho_c`: fraction of unit transmit power that must point along `h_c^H`.
pub fn required_comm_fraction(h_c_norm2: f64, scenario: &Scenario) -> f64 {
    scenario.gamma0_linear() * scenario.sigma_c2_w / (scenario.p_t_w * h_c_norm2)
}

pub fn solve_beamformer(
    h_st: &DVector<Complex64>,
    h_sr_norm2: f64,
    h_c: &DVector<Complex64>,
    scenario: &Scenario,
) -> Result<BfSolution> {
    let (nc, ns) = (h_c.norm(), h_st.norm());
    if nc == 0.0 || ns == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let rho_c = required_comm_fraction(nc * nc, scenario);
    if rho_c > 1.0 {
        return Err(Error::BeamformerInfeasible {
            max_snr_c_db: linear_to_db(scenario.p_t_w * nc * nc / scenario.sigma_c2_w),
        });
    }

    let u1 = h_c.conjugate() / Complex64::from(nc);
    let c1 = apply_row(h_st, &u1);
    let mut resid = h_st.conjugate() - &u1 * c1.conj();
    let rn = resid.norm();
    // numerically collinear channels leave no second direction
    let has_u2 = rn > 1e-12 * ns;
    let c2 = if has_u2 {
        resid /= Complex64::from(rn);
        apply_row(h_st, &resid)
    } else {
        Complex64::new(0.0, 0.0)
    };

    let unconstrained = c1.norm_sqr() / (c1.norm_sqr() + c2.norm_sqr());
    let (f, active) = if unconstrained >= rho_c {
        (h_st.conjugate() / Complex64::from(ns), false)
    } else {
        let x1 = Complex64::from_polar(rho_c.sqrt(), -c1.arg());
        let x2 = Complex64::from_polar((1.0 - rho_c).sqrt(), -c2.arg());
        (&u1 * x1 + &resid * x2, true)
    };

    let snr_s = scenario.p_t_w * h_sr_norm2 * apply_row(h_st, &f).norm_sqr() / scenario.sigma_s2_w;
    let snr_c = scenario.p_t_w * apply_row(h_c, &f).norm_sqr() / scenario.sigma_c2_w;
    Ok(BfSolution {
        f: Beamformer::new(f)?,
        snr_s_db: linear_to_db(snr_s),
        snr_c_db: linear_to_db(snr_c),
        constraint_active: active,
    })
}

/// Correlation-independent upper bound `P_t ||h_sr||^2 ||h_st||^2 / sigma_s^2`.
pub fn matched_filter_bound(h_st: &DVector<Complex64>, h_sr_norm2: f64, scenario: &Scenario) -> f64 {
    scenario.p_t_w * h_sr_norm2 * h_st.norm_squared() / scenario.sigma_s2_w
}

/// Unused-constraint check: would sensing matched filtering already satisfy
/// the comm floor?
pub fn matched_filter_meets_floor(h_st: &DVector<Complex64>, h_c: &DVector<Complex64>, scenario: &Scenario) -> bool {
    let ns2 = h_st.norm_squared();
    if ns2 == 0.0 {
        return false;
    }
    let g = inner_row(h_c, h_st).norm_sqr() / ns2;
    scenario.p_t_w * g / scenario.sigma_c2_w >= scenario.gamma0_linear()
}
