//! Lumped electromechanical description of a piezoelectric harvester.
//!
//! The mechanical side is a single-degree-of-freedom vibrator (M, K, D)
//! coupled to the clamped piezoelectric capacitance `Cp` through the
//! force-voltage factor α. Leakage of the piezoelectric element is the
//! resistance `Rp`; in the mechanical network it shows up as the damping
//! `Dp = α²·Rp` placed in parallel with the interface impedance.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// How the vibrator is driven.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Excitation {
    /// Base acceleration magnitude `A_Y` in m/s². The inertial force is `M·A_Y`.
    BaseAcceleration(f64),
    /// Force magnitude in N applied directly to the mass.
    Force(f64),
}

/// Series RLC analog of the mechanical vibrator seen from the electrical port.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ElectricalAnalog {
    /// Ω
    pub r: f64,
    /// H
    pub l: f64,
    /// F
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ImpedanceDomain {
    /// N·s/m
    Mechanical,
    /// Ω
    Electrical,
}

/// A complex impedance tagged with the domain it is expressed in.
///
/// Mechanical values are electrical values multiplied by α².
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DomainImpedance {
    pub value: Complex64,
    pub domain: ImpedanceDomain,
}

impl DomainImpedance {
    pub fn mechanical(value: Complex64) -> Self {
        Self { value, domain: ImpedanceDomain::Mechanical }
    }

    pub fn electrical(value: Complex64) -> Self {
        Self { value, domain: ImpedanceDomain::Electrical }
    }

    pub fn to_mechanical(self, alpha: f64) -> Self {
        match self.domain {
            ImpedanceDomain::Mechanical => self,
            ImpedanceDomain::Electrical => Self::mechanical(self.value * (alpha * alpha)),
        }
    }

    pub fn to_electrical(self, alpha: f64) -> Self {
        match self.domain {
            ImpedanceDomain::Electrical => self,
            ImpedanceDomain::Mechanical => Self::electrical(self.value / (alpha * alpha)),
        }
    }
}

/// Mechanical, piezoelectric and switching parameters of one harvester.
///
/// Values are validated on construction and immutable afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PehSystem {
    mass: f64,
    stiffness: f64,
    damping: f64,
    alpha: f64,
    cp: f64,
    rp: f64,
    gamma: f64,
    li: Option<f64>,
    cr: Option<f64>,
    excitation: Excitation,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value, reason: "must be finite and > 0" })
    }
}

impl PehSystem {
    /// Builds a system from mechanical parameters with no leakage (`Rp = ∞`),
    /// γ = -0.6 and a unit force excitation.
    pub fn new(mass: f64, stiffness: f64, damping: f64, alpha: f64, cp: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha != 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must be finite and non-zero",
            });
        }
        Ok(Self {
            mass: positive("M", mass)?,
            stiffness: positive("K", stiffness)?,
            damping: positive("D", damping)?,
            alpha,
            cp: positive("Cp", cp)?,
            rp: f64::INFINITY,
            gamma: -0.6,
            li: None,
            cr: None,
            excitation: Excitation::Force(1.0),
        })
    }

    /// Builds a system from its electrical analog: `M = α²L`, `K = α²/C`, `D = α²R`.
    pub fn from_electrical(analog: ElectricalAnalog, alpha: f64, cp: f64) -> Result<Self> {
        positive("R", analog.r)?;
        positive("L", analog.l)?;
        positive("C", analog.c)?;
        let a2 = alpha * alpha;
        Self::new(a2 * analog.l, a2 / analog.c, a2 * analog.r, alpha, cp)
    }

    /// Sets the dielectric leakage resistance (Ω). `f64::INFINITY` removes the branch.
    pub fn with_leakage(mut self, rp: f64) -> Result<Self> {
        if rp.is_nan() || rp <= 0.0 {
            return Err(Error::InvalidParameter { name: "Rp", value: rp, reason: "must be > 0 or infinite" });
        }
        self.rp = rp;
        Ok(self)
    }

    pub fn with_flip_factor(mut self, gamma: f64) -> Result<Self> {
        if !(gamma > -1.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter { name: "gamma", value: gamma, reason: "must lie in (-1, 1]" });
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn with_excitation(mut self, excitation: Excitation) -> Result<Self> {
        let (name, v) = match excitation {
            Excitation::BaseAcceleration(a) => ("A_Y", a),
            Excitation::Force(f) => ("F", f),
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter { name, value: v, reason: "must be finite and >= 0" });
        }
        self.excitation = excitation;
        Ok(self)
    }

    /// Flip inductance (H); only the time-domain oracle uses it.
    pub fn with_flip_inductance(mut self, li: f64) -> Result<Self> {
        self.li = Some(positive("Li", li)?);
        Ok(self)
    }

    /// Storage capacitance (F); only the time-domain oracle uses it.
    pub fn with_storage_capacitance(mut self, cr: f64) -> Result<Self> {
        self.cr = Some(positive("Cr", cr)?);
        Ok(self)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }
    pub fn damping(&self) -> f64 {
        self.damping
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }
    pub fn cp(&self) -> f64 {
        self.cp
    }
    pub fn rp(&self) -> f64 {
        self.rp
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn flip_inductance(&self) -> Option<f64> {
        self.li
    }
    pub fn storage_capacitance(&self) -> Option<f64> {
        self.cr
    }
    pub fn excitation(&self) -> Excitation {
        self.excitation
    }

    /// Short-circuit natural frequency `√(K/M)` (rad/s).
    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    /// Mechanical damping ratio `D / (2Mω_n)`.
    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * self.mass * self.natural_frequency())
    }

    /// `(R, L, C)` with `R = D/α²`, `L = M/α²`, `C = α²/K`.
    pub fn electrical_analog(&self) -> ElectricalAnalog {
        let a2 = self.alpha_sq();
        ElectricalAnalog { r: self.damping / a2, l: self.mass / a2, c: a2 / self.stiffness }
    }

    /// `Z_m = D + j(ωM − K/ω)` in the mechanical domain.
    pub fn mechanical_impedance(&self, omega: f64) -> Result<DomainImpedance> {
        check_omega(omega)?;
        Ok(DomainImpedance::mechanical(Complex64::new(
            self.damping,
            omega * self.mass - self.stiffness / omega,
        )))
    }

    /// Excitation force magnitude (N).
    pub fn excitation_force(&self) -> f64 {
        match self.excitation {
            Excitation::BaseAcceleration(a) => self.mass * a,
            Excitation::Force(f) => f,
        }
    }

    /// Mechanical image of the dielectric leakage, `Dp = α²·Rp`. Infinite when
    /// the leakage branch is absent.
    pub fn dielectric_damping(&self) -> f64 {
        self.alpha_sq() * self.rp
    }

    /// `α²/(ωCp)`: the scale that turns a normalized interface impedance
    /// (units of `1/(ωCp)`) into a mechanical one.
    pub fn impedance_scale(&self, omega: f64) -> f64 {
        self.alpha_sq() / (omega * self.cp)
    }
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveFrequency(omega))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn strong() -> PehSystem {
        PehSystem::from_electrical(ElectricalAnalog { r: 24.93e3, l: 1.61e3, c: 5.03e-9 }, 2.35e-3, 22.33e-9)
            .unwrap()
            .with_excitation(Excitation::BaseAcceleration(4.9))
            .unwrap()
    }

    #[test]
    fn strong_table_values_invert_to_mechanical() {
        let s = strong();
        assert!(rel(s.mass(), 8.89e-3) < 1e-3, "M = {}", s.mass());
        assert!(rel(s.damping(), 0.1377) < 1e-3, "D = {}", s.damping());
        assert!(rel(s.stiffness(), 1098.0) < 1e-3, "K = {}", s.stiffness());
    }

    #[test]
    fn weak_table_damping() {
        let s = PehSystem::from_electrical(ElectricalAnalog { r: 345.47e3, l: 31.18e3, c: 0.27e-9 }, 0.37e-3, 45.7e-9)
            .unwrap();
        // α²R = (0.37e-3)² · 345.47e3
        assert!(rel(s.damping(), 4.7295e-2) < 1e-4, "D = {}", s.damping());
    }

    #[test]
    fn unit_system_is_identity() {
        let s = PehSystem::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(s.electrical_analog(), ElectricalAnalog { r: 1.0, l: 1.0, c: 1.0 });
    }

    #[test]
    fn mechanical_impedance_examples() {
        let s = PehSystem::new(1.0, 1.0, 0.1, 1.0, 1.0).unwrap();
        let z = s.mechanical_impedance(2.0).unwrap().value;
        assert!((z - Complex64::new(0.1, 1.5)).norm() < 1e-15);
        let zn = s.mechanical_impedance(s.natural_frequency()).unwrap().value;
        assert!(zn.im.abs() < 1e-15 && zn.re == 0.1);
        assert!(s.mechanical_impedance(1e-9).unwrap().value.im < -1e8);
        assert!(matches!(s.mechanical_impedance(0.0), Err(Error::NonPositiveFrequency(_))));
        assert!(s.mechanical_impedance(-1.0).is_err());
    }

    #[test]
    fn excitation_force_examples() {
        let s = strong();
        assert!(rel(s.excitation_force(), 4.36e-2) < 2e-3, "F = {}", s.excitation_force());
        let zero = s.with_excitation(Excitation::BaseAcceleration(0.0)).unwrap();
        assert_eq!(zero.excitation_force(), 0.0);
        let heavy = PehSystem::new(2.0 * s.mass(), s.stiffness(), s.damping(), s.alpha(), s.cp())
            .unwrap()
            .with_excitation(Excitation::BaseAcceleration(4.9))
            .unwrap();
        assert!(rel(heavy.excitation_force(), 2.0 * s.excitation_force()) < 1e-15);
    }

    #[test]
    fn dielectric_damping_examples() {
        let s = strong().with_leakage(2e6).unwrap();
        assert!(rel(s.dielectric_damping(), 11.045) < 1e-4);
        let light = strong().with_leakage(200e3).unwrap();
        assert!(rel(s.dielectric_damping() / light.dielectric_damping(), 10.0) < 1e-14);
        assert!(strong().dielectric_damping().is_infinite());
    }

    #[test]
    fn constructor_rejects_invalid_values() {
        assert!(PehSystem::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PehSystem::new(1.0, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PehSystem::new(1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(PehSystem::new(1.0, 1.0, 1.0, 1.0, f64::NAN).is_err());
        let s = PehSystem::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(s.with_flip_factor(-1.0).is_err());
        assert!(s.with_flip_factor(1.0).is_ok());
        assert!(s.with_leakage(0.0).is_err());
        assert!(s.with_excitation(Excitation::Force(-1.0)).is_err());
    }

    #[test]
    fn domain_conversion_scales_by_alpha_squared() {
        let z = DomainImpedance::electrical(Complex64::new(3.0, -4.0));
        let m = z.to_mechanical(0.5);
        assert_eq!(m.domain, ImpedanceDomain::Mechanical);
        assert_eq!(m.value, Complex64::new(0.75, -1.0));
        assert_eq!(m.to_electrical(0.5), z);
    }
}
