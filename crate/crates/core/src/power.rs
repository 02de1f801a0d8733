//! Harvested power through the mechanical network, tuning sweeps,
//! per-frequency optimization and bandwidth metrics.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::impedance::{equivalent_impedance, EquivalentImpedance};
use crate::optimize::{maximize, SearchOptions};
use crate::system::{check_omega, PehSystem};
use crate::waveform::{Topology, TuningPoint};
use crate::Complex64;

/// Branch velocity through `Z_e` when the source `F` drives `Z_m` in series
/// with `D_p ∥ Z_e`.
fn branch_velocity(z_m: Complex64, z_e: Complex64, d_p: f64, force: f64) -> Result<Complex64> {
    let v = if d_p.is_infinite() {
        let den = z_m + z_e;
        if den.norm_sqr() == 0.0 {
            return Err(Error::DegenerateCurve("singular network: Z_m + Z_e = 0"));
        }
        Complex64::new(force, 0.0) / den
    } else {
        let den = z_m * d_p + z_m * z_e + z_e * d_p;
        if den.norm_sqr() == 0.0 {
            return Err(Error::DegenerateCurve("singular network denominator"));
        }
        Complex64::new(force * d_p, 0.0) / den
    };
    Ok(v)
}

/// Power (W) dissipated in the regenerative damping `D_h = α²R_h`.
pub fn harvested_power(z_m: Complex64, z_e: &EquivalentImpedance, d_p: f64, force: f64) -> Result<f64> {
    if !(force >= 0.0 && force.is_finite()) {
        return Err(Error::InvalidParameter { name: "force", value: force, reason: "must be finite and >= 0" });
    }
    if !(d_p > 0.0) {
        return Err(Error::InvalidParameter { name: "d_p", value: d_p, reason: "must be > 0 (infinite allowed)" });
    }
    let v = branch_velocity(z_m, z_e.mechanical(), d_p, force)?;
    Ok(0.5 * z_e.d_h() * v.norm_sqr())
}

/// Steady operating point of one tuning at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OperatingPoint {
    pub omega: f64,
    pub tuning: TuningPoint,
    pub z_e: EquivalentImpedance,
    /// Mass velocity phasor (m/s).
    pub velocity: Complex64,
    /// Velocity phasor through the `Z_e` branch (m/s).
    pub branch_velocity: Complex64,
    /// Amplitude of the current into `Cp` and the interface (A).
    pub current_amplitude: f64,
    /// Open-circuit voltage amplitude `I_h/(ωCp)` (V).
    pub voc: f64,
    pub p_h: f64,
    /// Flip and extraction losses (W).
    pub p_d: f64,
    /// Dielectric loss in `R_p` (W).
    pub p_rp: f64,
}

impl OperatingPoint {
    /// Absolute rectified voltage (V), where the tuning has one.
    pub fn rectified_voltage(&self, gamma: f64) -> Result<Option<f64>> {
        Ok(self.tuning.rectified_voltage(gamma)?.map(|v| v * self.voc))
    }
}

pub fn operating_point(sys: &PehSystem, tuning: &TuningPoint, omega: f64) -> Result<OperatingPoint> {
    let z_m = sys.mechanical_impedance(omega)?.value;
    let z_e = equivalent_impedance(sys, tuning, omega)?;
    let d_p = sys.dielectric_damping();
    let force = sys.excitation_force();
    let ve = branch_velocity(z_m, z_e.mechanical(), d_p, force)?;
    let f_e = ve * z_e.mechanical();
    let velocity = if d_p.is_infinite() { ve } else { ve + f_e / d_p };
    let p_rp = if d_p.is_infinite() { 0.0 } else { 0.5 * f_e.norm_sqr() / d_p };
    let current_amplitude = sys.alpha() * ve.norm();
    Ok(OperatingPoint {
        omega,
        tuning: *tuning,
        z_e,
        velocity,
        branch_velocity: ve,
        current_amplitude,
        voc: current_amplitude / (omega * sys.cp()),
        p_h: 0.5 * z_e.d_h() * ve.norm_sqr(),
        p_d: 0.5 * z_e.d_d() * ve.norm_sqr(),
        p_rp,
    })
}

pub fn power_at(sys: &PehSystem, tuning: &TuningPoint, omega: f64) -> Result<f64> {
    let z_m = sys.mechanical_impedance(omega)?.value;
    let z_e = equivalent_impedance(sys, tuning, omega)?;
    harvested_power(z_m, &z_e, sys.dielectric_damping(), sys.excitation_force())
}

/// Power limit with leakage: the conjugate-matched power behind `Z_m ∥ D_p`.
/// Equals `F²/(8D)` when `R_p` is infinite.
pub fn power_limit_with_leakage(sys: &PehSystem, omega: f64) -> Result<f64> {
    let z_m = sys.mechanical_impedance(omega)?.value;
    let f = sys.excitation_force();
    let d_p = sys.dielectric_damping();
    if d_p.is_infinite() {
        return Ok(f * f / (8.0 * sys.damping()));
    }
    Ok(f * f * d_p / (8.0 * (z_m.norm_sqr() + sys.damping() * d_p)))
}

/// Axes of a tuning sweep. `phi` is ignored by SEH and `fraction` (share of
/// the second parameter's valid range at each phase) by SECE.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TuningGrid {
    pub phi: Vec<f64>,
    pub fraction: Vec<f64>,
}

impl TuningGrid {
    pub fn uniform(phi_lo: f64, phi_hi: f64, phi_points: usize, fraction_points: usize) -> Self {
        let lin = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
        };
        Self { phi: lin(phi_lo, phi_hi, phi_points), fraction: lin(0.0, 1.0, fraction_points) }
    }

    /// Tunings in phase-major order with axes the topology ignores collapsed.
    pub fn tunings(&self, topology: Topology) -> Result<Vec<TuningPoint>> {
        if self.phi.is_empty() || self.fraction.is_empty() {
            return Err(Error::InvalidGrid("tuning axes must be non-empty"));
        }
        let phis: &[f64] = if topology.supports_phase() { &self.phi } else { &[0.0] };
        let fracs: &[f64] = if topology.has_second() { &self.fraction } else { &[0.0] };
        let mut out = Vec::with_capacity(phis.len() * fracs.len());
        for &phi in phis {
            for &s in fracs {
                out.push(TuningPoint::from_fraction(topology, phi, s)?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerPoint {
    pub omega: f64,
    pub tuning: TuningPoint,
    pub p_h: f64,
    pub d_h: f64,
    pub d_d: f64,
    pub k_e: f64,
}

pub fn evaluate_point(sys: &PehSystem, tuning: &TuningPoint, omega: f64) -> Result<PowerPoint> {
    let z_m = sys.mechanical_impedance(omega)?.value;
    let z_e = equivalent_impedance(sys, tuning, omega)?;
    let p_h = harvested_power(z_m, &z_e, sys.dielectric_damping(), sys.excitation_force())?;
    Ok(PowerPoint { omega, tuning: *tuning, p_h, d_h: z_e.d_h(), d_d: z_e.d_d(), k_e: z_e.k_e() })
}

/// Power over `omegas × tunings`, frequency-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerMap {
    pub omegas: Vec<f64>,
    pub tunings: Vec<TuningPoint>,
    pub points: Vec<PowerPoint>,
}

impl PowerMap {
    pub fn at(&self, omega_index: usize, tuning_index: usize) -> &PowerPoint {
        &self.points[omega_index * self.tunings.len() + tuning_index]
    }

    /// Largest power over all tunings at each frequency.
    pub fn envelope(&self) -> Vec<f64> {
        self.points
            .chunks(self.tunings.len())
            .map(|row| row.iter().map(|p| p.p_h).fold(0.0, f64::max))
            .collect()
    }
}

pub fn sweep(sys: &PehSystem, topology: Topology, omegas: &[f64], grid: &TuningGrid) -> Result<PowerMap> {
    if omegas.is_empty() {
        return Err(Error::InvalidGrid("frequency grid must be non-empty"));
    }
    for &w in omegas {
        check_omega(w)?;
    }
    let tunings = grid.tunings(topology)?;
    let mut points = Vec::with_capacity(omegas.len() * tunings.len());
    for &w in omegas {
        for t in &tunings {
            points.push(evaluate_point(sys, t, w)?);
        }
    }
    Ok(PowerMap { omegas: omegas.to_vec(), tunings, points })
}

fn search_space(topology: Topology, pv: bool) -> [(f64, f64); 2] {
    let phi = if pv && topology.supports_phase() { (-FRAC_PI_2, FRAC_PI_2) } else { (0.0, 0.0) };
    let second = if topology.has_second() { (0.0, 1.0) } else { (0.0, 0.0) };
    [phi, second]
}

/// Tuning maximizing harvested power at `omega`. Without `pv` the phase is
/// held at zero.
pub fn optimal_at_frequency(sys: &PehSystem, topology: Topology, pv: bool, omega: f64, opts: &SearchOptions) -> Result<(TuningPoint, f64)> {
    check_omega(omega)?;
    let res = maximize(
        |x| match TuningPoint::from_fraction(topology, x[0], x[1]) {
            Ok(t) => power_at(sys, &t, omega).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        },
        &search_space(topology, pv),
        opts,
    )?;
    if !res.value.is_finite() {
        return Err(Error::DegenerateCurve("no feasible tuning"));
    }
    Ok((TuningPoint::from_fraction(topology, res.x[0], res.x[1])?, res.value))
}

/// Per-frequency optimized power curve.
pub fn optimized_curve(sys: &PehSystem, topology: Topology, pv: bool, omegas: &[f64], opts: &SearchOptions) -> Result<Vec<(TuningPoint, f64)>> {
    omegas.iter().map(|&w| optimal_at_frequency(sys, topology, pv, w, opts)).collect()
}

/// Outer extent of the region where a sampled curve reaches `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    /// The curve is still above threshold at a grid end.
    pub truncated: bool,
}

impl Span {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn check_curve(omegas: &[f64], p: &[f64]) -> Result<()> {
    if omegas.len() < 2 || omegas.len() != p.len() {
        return Err(Error::DegenerateCurve("need at least two samples on a matching grid"));
    }
    if p.iter().chain(omegas).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateCurve("non-finite sample"));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateCurve("frequency grid must increase strictly"));
    }
    Ok(())
}

/// Span between the outermost threshold crossings, located by linear
/// interpolation. Empty (zero width at the peak) when nothing reaches it.
pub fn threshold_span(omegas: &[f64], p: &[f64], threshold: f64) -> Result<Span> {
    check_curve(omegas, p)?;
    let n = p.len();
    let Some(first) = p.iter().position(|&v| v >= threshold) else {
        let (i, _) = p.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        return Ok(Span { lo: omegas[i], hi: omegas[i], truncated: false });
    };
    let last = p.iter().rposition(|&v| v >= threshold).unwrap_or(first);
    let cross = |i: usize, j: usize| {
        let (w0, w1, p0, p1) = (omegas[i], omegas[j], p[i], p[j]);
        if p1 == p0 { w0 } else { w0 + (threshold - p0) * (w1 - w0) / (p1 - p0) }
    };
    let lo = if first == 0 { omegas[0] } else { cross(first - 1, first) };
    let hi = if last == n - 1 { omegas[n - 1] } else { cross(last, last + 1) };
    Ok(Span { lo, hi, truncated: first == 0 || last == n - 1 })
}

fn peak(omegas: &[f64], p: &[f64]) -> Result<(f64, f64)> {
    let (i, &pk) = p
        .iter()
        .enumerate()
        .fold((0, &f64::MIN), |a, x| if x.1 > a.1 { x } else { a });
    if !(pk > 0.0) {
        return Err(Error::DegenerateCurve("curve has no positive peak"));
    }
    if p.iter().all(|&v| v == pk) {
        return Err(Error::DegenerateCurve("flat curve"));
    }
    Ok((omegas[i], pk))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandwidthReport {
    pub peak_power: f64,
    pub peak_omega: f64,
    /// Span where power stays above half its own peak (rad/s).
    pub delta_omega_hm: f64,
    /// Span where power stays above half the SEH baseline peak (rad/s).
    pub delta_omega_sr: f64,
    /// `Δω_HM` over the `Δω_HM` of the zero-phase reference curve.
    pub broadening_ratio: Option<f64>,
    /// Some half-power span hit a grid end.
    pub truncated: bool,
}

/// Bandwidth of `curve`, referenced to the SEH curve and optionally to the
/// same circuit operated at zero phase.
pub fn bandwidth_metrics(omegas: &[f64], curve: &[f64], seh_baseline: &[f64], phase_zero: Option<&[f64]>) -> Result<BandwidthReport> {
    check_curve(omegas, curve)?;
    check_curve(omegas, seh_baseline)?;
    let (peak_omega, peak_power) = peak(omegas, curve)?;
    let (_, seh_peak) = peak(omegas, seh_baseline)?;
    let hm = threshold_span(omegas, curve, 0.5 * peak_power)?;
    let sr = threshold_span(omegas, curve, 0.5 * seh_peak)?;
    let mut truncated = hm.truncated || sr.truncated;
    let broadening_ratio = match phase_zero {
        Some(base) => {
            check_curve(omegas, base)?;
            let (_, bp) = peak(omegas, base)?;
            let bs = threshold_span(omegas, base, 0.5 * bp)?;
            truncated |= bs.truncated;
            Some(hm.width() / bs.width())
        }
        None => None,
    };
    Ok(BandwidthReport {
        peak_power,
        peak_omega,
        delta_omega_hm: hm.width(),
        delta_omega_sr: sr.width(),
        broadening_ratio,
        truncated,
    })
}

/// Interior local maxima whose topographic prominence is at least
/// `min_prominence` times the global maximum.
pub fn local_maxima(p: &[f64], min_prominence: f64) -> Vec<usize> {
    let n = p.len();
    let global = p.iter().copied().fold(f64::MIN, f64::max);
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(p[i] > p[i - 1] && p[i] >= p[i + 1]) {
            continue;
        }
        // Skip to the end of a plateau.
        let mut j = i;
        while j + 1 < n && p[j + 1] == p[i] {
            j += 1;
        }
        if j + 1 >= n || p[j + 1] > p[i] {
            continue;
        }
        let mut left_min = p[i];
        let mut k = i;
        while k > 0 && p[k - 1] <= p[i] {
            k -= 1;
            left_min = left_min.min(p[k]);
        }
        let left_bounded = k > 0;
        let mut right_min = p[i];
        let mut k = j;
        while k + 1 < n && p[k + 1] <= p[i] {
            k += 1;
            right_min = right_min.min(p[k]);
        }
        let right_bounded = k + 1 < n;
        let base = match (left_bounded, right_bounded) {
            (true, true) => left_min.max(right_min),
            (true, false) => left_min,
            (false, true) => right_min,
            (false, false) => left_min.min(right_min),
        };
        if p[i] - base >= min_prominence * global {
            out.push(i);
        }
    }
    out
}
