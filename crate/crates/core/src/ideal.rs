//! The ideal kinetic energy harvester: a linear vibrator loaded by a freely
//! tunable regenerative damping `D_h` and, in the generalized form, a freely
//! tunable reactive stiffness `K_e`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::system::{check_omega, PehSystem};

/// Dimensionless operating point of the ideal model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdealParams {
    /// Mechanical damping ratio ζ.
    pub zeta: f64,
    /// `D_h / D`.
    pub eta: f64,
    /// ω / ω_n.
    pub omega_tilde: f64,
}

impl IdealParams {
    pub fn new(zeta: f64, eta: f64, omega_tilde: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidParameter { name: "zeta", value: zeta, reason: "must be > 0" });
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter { name: "eta", value: eta, reason: "must be >= 0" });
        }
        if !(omega_tilde > 0.0 && omega_tilde.is_finite()) {
            return Err(Error::InvalidParameter { name: "omega_tilde", value: omega_tilde, reason: "must be > 0" });
        }
        Ok(Self { zeta, eta, omega_tilde })
    }

    /// Harvesting damping ratio ζ_h = η·ζ.
    pub fn zeta_h(&self) -> f64 {
        self.eta * self.zeta
    }
}

/// Resonant harvested power over the maximum mechanical damping power: `η/(1+η)²`.
pub fn beta_r(eta: f64) -> f64 {
    eta / ((1.0 + eta) * (1.0 + eta))
}

/// Harvested power at ω̃ normalized by its resonant value.
pub fn beta_o(p: &IdealParams) -> f64 {
    let w = p.omega_tilde;
    let s = 2.0 * w * (1.0 + p.eta) * p.zeta;
    let d = 1.0 - w * w;
    s * s / (d * d + s * s)
}

/// Closed-form normalized half-power bandwidth `2(1+η)ζ`.
pub fn half_power_bandwidth(eta: f64, zeta: f64) -> f64 {
    2.0 * (1.0 + eta) * zeta
}

/// Half-power points of `beta_o` found by bisection next to the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPowerReport {
    pub closed_form: f64,
    pub lower_root: Option<f64>,
    pub upper_root: Option<f64>,
    /// Both roots were bracketed, so the numeric span is meaningful.
    pub two_sided: bool,
}

impl HalfPowerReport {
    pub fn numeric_span(&self) -> Option<f64> {
        match (self.lower_root, self.upper_root) {
            (Some(lo), Some(hi)) => Some(hi - lo),
            _ => None,
        }
    }
}

const ROOT_TOL: f64 = 1e-12;
const UPPER_BRACKET: f64 = 4.0;

/// Bisection on `f` over `[lo, hi]`, assuming a sign change. Returns `None`
/// when the bracket does not straddle a root.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Locates both roots of `β_o = 1/2` by bisection on `(0, 1)` and `(1, 4]`.
///
/// When the upper root escapes the bracket (very heavy damping) the report is
/// marked one-sided and only the closed form is meaningful.
pub fn half_power_roots(eta: f64, zeta: f64) -> Result<HalfPowerReport> {
    let g = |w: f64| {
        beta_o(&IdealParams { zeta, eta, omega_tilde: w }) - 0.5
    };
    IdealParams::new(zeta, eta, 1.0)?;
    let lower = bisect(f64::MIN_POSITIVE, 1.0, ROOT_TOL, g);
    let upper = bisect(1.0, UPPER_BRACKET, ROOT_TOL, g);
    Ok(HalfPowerReport {
        closed_form: half_power_bandwidth(eta, zeta),
        lower_root: lower,
        upper_root: upper,
        two_sided: lower.is_some() && upper.is_some(),
    })
}

/// Power limits `(P_m,max, P_h,max)` in W: `F²/(2D)` and `F²/(8D)`.
pub fn power_limits(sys: &PehSystem) -> (f64, f64) {
    let f = sys.excitation_force();
    let pm = f * f / (2.0 * sys.damping());
    (pm, pm / 4.0)
}

/// Conjugate match of the ideal two-parameter load: `(D_h, K_e) = (D, ω²M − K)`.
pub fn conjugate_match(sys: &PehSystem, omega: f64) -> Result<(f64, f64)> {
    check_omega(omega)?;
    Ok((sys.damping(), omega * omega * sys.mass() - sys.stiffness()))
}

/// Power (W) absorbed by `D_h` when the vibrator is loaded by `D_h − jK_e/ω`.
pub fn ideal_harvested_power(sys: &PehSystem, omega: f64, d_h: f64, k_e: f64) -> Result<f64> {
    let zm = sys.mechanical_impedance(omega)?.value;
    let total = zm + num_complex::Complex64::new(d_h, -k_e / omega);
    let f = sys.excitation_force();
    Ok(0.5 * f * f * d_h / total.norm_sqr())
}
