//! Equivalent impedance of the piezoelectric capacitance plus interface,
//! its attainable region in the complex plane and load matching.
//!
//! Normalized impedances are in units of `1/(ωCp)` on the electrical side,
//! or equivalently `α²/(ωCp)` on the mechanical side.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fourier::fundamental_harmonic;
use crate::ideal::bisect;
use crate::optimize::{maximize, SearchOptions};
use crate::system::{check_omega, DomainImpedance, PehSystem};
use crate::waveform::{energy_split_normalized, synthesize_vp, Topology, TuningPoint};
use crate::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EquivalentImpedance {
    pub omega: f64,
    /// Mechanical-domain impedance.
    pub z_e: DomainImpedance,
    /// `Z_e,elec·ωCp`.
    pub normalized: Complex64,
    /// Regenerative resistance (Ω).
    pub r_h: f64,
    /// Dissipative resistance (Ω).
    pub r_d: f64,
    /// Equivalent capacitance `−1/(ω·Im Z_e,elec)` (F). Infinite for a
    /// purely resistive load and negative when the load looks inductive.
    pub c_e: f64,
    alpha: f64,
}

impl EquivalentImpedance {
    pub fn electrical(&self) -> Complex64 {
        self.z_e.to_electrical(self.alpha).value
    }

    pub fn mechanical(&self) -> Complex64 {
        self.z_e.value
    }

    /// Regenerative damping `α²R_h` (N·s/m).
    pub fn d_h(&self) -> f64 {
        self.alpha * self.alpha * self.r_h
    }

    /// Dissipative damping `α²R_d` (N·s/m).
    pub fn d_d(&self) -> f64 {
        self.alpha * self.alpha * self.r_d
    }

    /// Equivalent stiffness `K_e` with `Z_e = D_h + D_d − jK_e/ω` (N/m).
    pub fn k_e(&self) -> f64 {
        -self.omega * self.z_e.value.im
    }
}

/// Normalized `Z̃` with normalized harvested and dissipated energy per cycle
/// (units of `Cp·V_oc²`).
pub fn normalized_impedance(tuning: &TuningPoint, gamma: f64) -> Result<(Complex64, f64, f64)> {
    let wave = synthesize_vp(tuning, gamma, 1.0)?;
    let z = fundamental_harmonic(&wave);
    let (eh, ed) = energy_split_normalized(&wave);
    Ok((z, eh, ed))
}

/// Describing-function impedance of `tuning` at `omega`. The result does not
/// depend on the current amplitude.
pub fn equivalent_impedance(sys: &PehSystem, tuning: &TuningPoint, omega: f64) -> Result<EquivalentImpedance> {
    check_omega(omega)?;
    let (z, eh, ed) = normalized_impedance(tuning, sys.gamma())?;
    let per_ohm = omega * sys.cp();
    // r = 2e/(T·I_h²) with e in units of Cp·V_oc² = I_h²/(ω²Cp).
    let to_ohm = 1.0 / (PI * per_ohm);
    let im = z.im / per_ohm;
    Ok(EquivalentImpedance {
        omega,
        z_e: DomainImpedance::electrical(z / per_ohm).to_mechanical(sys.alpha()),
        normalized: z,
        r_h: eh * to_ohm,
        r_d: ed * to_ohm,
        c_e: if im == 0.0 { f64::INFINITY } else { -1.0 / (omega * im) },
        alpha: sys.alpha(),
    })
}

/// A circle in the normalized impedance plane.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

impl Circle {
    /// Signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, z: Complex64) -> f64 {
        (z - self.center).norm() - self.radius
    }
}

fn flip_gain(gamma: f64) -> Result<f64> {
    if gamma == -1.0 {
        return Err(Error::SingularFlipSystem);
    }
    if !(gamma > -1.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter { name: "gamma", value: gamma, reason: "must lie in (-1, 1]" });
    }
    Ok((2.0 / PI) * (1.0 - gamma) / (1.0 + gamma))
}

fn check_bound_phi(phi: f64) -> Result<()> {
    if !(phi.abs() <= FRAC_PI_2 + 1e-12) {
        return Err(Error::OutOfDomain { name: "phi", value: phi, lower: -FRAC_PI_2, upper: FRAC_PI_2 });
    }
    Ok(())
}

fn circle_point(k: f64, phi: f64) -> Complex64 {
    Complex64::new(k * (1.0 + (2.0 * phi).cos()), -k * (2.0 * phi).sin() - 1.0)
}

/// Boundary circle of phase-variable SSHI for flipping factor `gamma`.
pub fn sshi_circle(gamma: f64) -> Result<Circle> {
    let k = flip_gain(gamma)?;
    Ok(Circle { center: Complex64::new(k, -1.0), radius: k })
}

/// Boundary circle of phase-variable SECE.
pub fn sece_circle() -> Circle {
    Circle { center: Complex64::new(2.0 / PI, -1.0), radius: 2.0 / PI }
}

/// Normalized extreme impedance of PV-SSHI at phase `phi`.
pub fn pv_sshi_bound_normalized(phi: f64, gamma: f64) -> Result<Complex64> {
    check_bound_phi(phi)?;
    Ok(circle_point(flip_gain(gamma)?, phi))
}

/// Normalized impedance of PV-SECE at phase `phi`.
pub fn pv_sece_bound_normalized(phi: f64) -> Result<Complex64> {
    check_bound_phi(phi)?;
    Ok(circle_point(2.0 / PI, phi))
}

/// Extreme mechanical impedance of PV-SSHI at `omega`.
pub fn ze_bound_pv_sshi(omega: f64, phi: f64, gamma: f64, sys: &PehSystem) -> Result<DomainImpedance> {
    check_omega(omega)?;
    Ok(DomainImpedance::mechanical(pv_sshi_bound_normalized(phi, gamma)? * sys.impedance_scale(omega)))
}

/// Mechanical impedance of PV-SECE at `omega`.
pub fn ze_bound_pv_sece(omega: f64, phi: f64, sys: &PehSystem) -> Result<DomainImpedance> {
    check_omega(omega)?;
    Ok(DomainImpedance::mechanical(pv_sece_bound_normalized(phi)? * sys.impedance_scale(omega)))
}

/// Sampling density of the tuning space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionGrid {
    pub phi_points: usize,
    pub second_points: usize,
}

impl Default for RegionGrid {
    fn default() -> Self {
        Self { phi_points: 181, second_points: 201 }
    }
}

impl RegionGrid {
    pub const MIN_POINTS: usize = 16;

    fn validate(&self) -> Result<()> {
        if self.phi_points < Self::MIN_POINTS || self.second_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid("region grid needs at least 16 points per axis"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RegionKind {
    Point,
    Curve1d,
    Disk2d,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionSample {
    pub tuning: TuningPoint,
    pub z: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttainableRegion {
    pub kind: RegionKind,
    /// Normalized impedances.
    pub samples: Vec<RegionSample>,
    pub closed_form: Option<Circle>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Tuning points covering the search space of `topology`, phase-major.
pub fn tuning_samples(topology: Topology, pv: bool, phi_points: usize, second_points: usize) -> Result<Vec<TuningPoint>> {
    let phis: Vec<f64> = if pv && topology.supports_phase() {
        linspace(-FRAC_PI_2, FRAC_PI_2, phi_points).collect()
    } else {
        alloc::vec![0.0]
    };
    let fractions: Vec<f64> = if topology.has_second() {
        linspace(0.0, 1.0, second_points).collect()
    } else {
        alloc::vec![0.0]
    };
    let mut out = Vec::with_capacity(phis.len() * fractions.len());
    for &phi in &phis {
        for &s in &fractions {
            out.push(TuningPoint::from_fraction(topology, phi, s)?);
        }
    }
    Ok(out)
}

pub fn attainable_region(sys: &PehSystem, topology: Topology, omega: f64, pv: bool, grid: RegionGrid) -> Result<AttainableRegion> {
    check_omega(omega)?;
    grid.validate()?;
    let pv = pv && topology.supports_phase();
    let kind = match (topology, pv) {
        (Topology::Sece, false) => RegionKind::Point,
        (Topology::Sece, true) | (_, false) => RegionKind::Curve1d,
        (_, true) => RegionKind::Disk2d,
    };
    let closed_form = match (topology, pv) {
        (Topology::Sece, true) => Some(sece_circle()),
        (Topology::SeriesSshi | Topology::ParallelSshi, true) => Some(sshi_circle(sys.gamma())?),
        _ => None,
    };
    let samples = tuning_samples(topology, pv, grid.phi_points, grid.second_points)?
        .into_iter()
        .map(|tuning| Ok(RegionSample { tuning, z: normalized_impedance(&tuning, sys.gamma())?.0 }))
        .collect::<Result<Vec<_>>>()?;
    Ok(AttainableRegion { kind, samples, closed_form })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchOptions {
    /// Feasibility tolerance as a fraction of `|Z_m|`.
    pub tolerance: f64,
    pub search: SearchOptions,
    /// Frequency window `(lo, hi)` in units of ω_n and its sample count for
    /// counting SEH matching frequencies.
    pub seh_window: (f64, f64, usize),
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.01,
            search: SearchOptions { coarse_points: 25, rounds: 6, shrink: 0.2, line_points: 8 },
            seh_window: (0.7, 1.4, 1401),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchReport {
    pub omega: f64,
    /// Load impedance that maximizes harvested power (mechanical).
    pub target: DomainImpedance,
    pub target_normalized: Complex64,
    /// Distance from the attainable region to the target (mechanical, N·s/m).
    pub distance: f64,
    /// `distance / |Z_m|`.
    pub relative_distance: f64,
    pub feasible: bool,
    pub closest_tuning: TuningPoint,
    /// Number of frequencies in the window where the target crosses the
    /// SEH curve. Only reported for SEH.
    pub seh_intersections: Option<usize>,
}

/// Source impedance seen by the interface: `Z_m` in parallel with `D_p`.
pub fn thevenin_impedance(sys: &PehSystem, omega: f64) -> Result<Complex64> {
    let zm = sys.mechanical_impedance(omega)?.value;
    let dp = sys.dielectric_damping();
    Ok(if dp.is_infinite() { zm } else { zm * dp / (zm + dp) })
}

/// Optimal load `conj(Z_th)` (mechanical).
pub fn match_target(sys: &PehSystem, omega: f64) -> Result<Complex64> {
    Ok(thevenin_impedance(sys, omega)?.conj())
}

fn search_bounds(topology: Topology, pv: bool) -> ([(f64, f64); 2], bool, bool) {
    let use_phi = pv && topology.supports_phase();
    let use_second = topology.has_second();
    let phi = if use_phi { (-FRAC_PI_2, FRAC_PI_2) } else { (0.0, 0.0) };
    let second = if use_second { (0.0, 1.0) } else { (0.0, 0.0) };
    ([phi, second], use_phi, use_second)
}

/// Closest attainable normalized impedance to `target` and its distance.
///
/// Targets outside the region are closest to its rim, which maps to the edges
/// of the tuning rectangle, so each edge gets its own line search besides the
/// interior search.
pub fn closest_tuning(sys: &PehSystem, topology: Topology, pv: bool, target: Complex64, opts: &SearchOptions) -> Result<(TuningPoint, f64)> {
    let (bounds, _, _) = search_bounds(topology, pv);
    let gamma = sys.gamma();
    let objective = |x: &[f64]| match TuningPoint::from_fraction(topology, x[0], x[1]).and_then(|t| normalized_impedance(&t, gamma)) {
        Ok((z, _, _)) => -(z - target).norm_sqr(),
        Err(_) => f64::NAN,
    };
    let [phi, second] = bounds;
    let edges = [
        [phi, (second.0, second.0)],
        [phi, (second.1, second.1)],
        [(phi.0, phi.0), second],
        [(phi.1, phi.1), second],
    ];
    let mut best = maximize(objective, &bounds, opts)?;
    for edge in edges {
        let r = maximize(objective, &edge, opts)?;
        if r.value > best.value {
            best = r;
        }
    }
    let tuning = TuningPoint::from_fraction(topology, best.x[0], best.x[1])?;
    Ok((tuning, (-best.value).max(0.0).sqrt()))
}

fn seh_normalized(gamma: f64, r: f64) -> Complex64 {
    normalized_impedance(&TuningPoint::Seh { vr: r }, gamma).map(|x| x.0).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
}

/// Counts frequencies in `omegas` where the normalized target crosses the
/// SEH curve. The curve is split at its maximum resistance `Ṽ_r = 1/2` into
/// two branches, each monotone in `Re Z̃`, and a crossing is a sign change
/// of the reactance mismatch on either branch.
pub fn seh_intersections(sys: &PehSystem, omegas: &[f64]) -> Result<usize> {
    let gamma = sys.gamma();
    let re_max = seh_normalized(gamma, 0.5).re;
    let mut last: [Option<f64>; 2] = [None, None];
    let mut count = 0;
    for &w in omegas {
        let t = match_target(sys, w)? / sys.impedance_scale(w);
        for (b, (lo, hi)) in [(0.0, 0.5), (0.5, 1.0)].into_iter().enumerate() {
            let residual = if t.re >= 0.0 && t.re <= re_max {
                bisect(lo, hi, 1e-12, |r| seh_normalized(gamma, r).re - t.re).map(|r| seh_normalized(gamma, r).im - t.im)
            } else {
                None
            };
            if let (Some(prev), Some(cur)) = (last[b], residual) {
                if prev != 0.0 && cur.signum() != prev.signum() {
                    count += 1;
                }
            }
            last[b] = residual;
        }
    }
    Ok(count)
}

pub fn match_report(sys: &PehSystem, topology: Topology, omega: f64, pv: bool, opts: &MatchOptions) -> Result<MatchReport> {
    check_omega(omega)?;
    let scale = sys.impedance_scale(omega);
    let target = match_target(sys, omega)?;
    let target_normalized = target / scale;
    let (closest, dist_norm) = closest_tuning(sys, topology, pv, target_normalized, &opts.search)?;
    let zm = sys.mechanical_impedance(omega)?.value.norm();
    let distance = dist_norm * scale;
    let seh_intersections = if topology == Topology::Seh {
        let wn = sys.natural_frequency();
        let (lo, hi, n) = opts.seh_window;
        let omegas: Vec<f64> = linspace(lo * wn, hi * wn, n.max(2)).collect();
        Some(seh_intersections(sys, &omegas)?)
    } else {
        None
    };
    Ok(MatchReport {
        omega,
        target: DomainImpedance::mechanical(target),
        target_normalized,
        distance,
        relative_distance: distance / zm,
        feasible: distance <= opts.tolerance * zm,
        closest_tuning: closest,
        seh_intersections,
    })
}
