//! Steady-state piezoelectric voltage of the interface circuits.
//!
//! The current into the piezoelectric capacitance and interface is taken as
//! `i_h = I_h·sin(ωt)`, so the open-circuit charging slope is
//! `−V_oc·cos(ωt)` with `V_oc = I_h/(ωCp)`. Every waveform is a list of
//! angle segments on which `v_p / V_oc = a + b·cos(ωt)`, with `b = −1` while
//! the capacitance charges freely and `b = 0` while a rectifier clamps it.
//! Bias flips and charge extractions are instantaneous jumps between
//! segments.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Slack used when checking angle domains, so that boundaries computed in
/// floating point (e.g. `θ = π + φ`) are accepted.
const DOMAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Topology {
    /// Full-bridge rectifier into a constant voltage.
    Seh,
    /// Synchronous electric charge extraction.
    Sece,
    /// Series synchronized switch harvesting on inductor.
    SeriesSshi,
    /// Parallel synchronized switch harvesting on inductor.
    ParallelSshi,
}

impl Topology {
    pub const ALL: [Topology; 4] = [Topology::Seh, Topology::Sece, Topology::SeriesSshi, Topology::ParallelSshi];

    pub fn name(self) -> &'static str {
        match self {
            Topology::Seh => "seh",
            Topology::Sece => "sece",
            Topology::SeriesSshi => "s-sshi",
            Topology::ParallelSshi => "p-sshi",
        }
    }

    /// Whether the switching phase is a meaningful tunable for this circuit.
    pub fn supports_phase(self) -> bool {
        !matches!(self, Topology::Seh)
    }

    /// Whether the circuit has a second tunable besides the phase.
    pub fn has_second(self) -> bool {
        !matches!(self, Topology::Sece)
    }
}

/// A circuit plus its tunable parameters.
///
/// `phi` is the delay of the synchronized switch after the `i_h` zero
/// crossing (negative means lead). `vr` is the rectified voltage normalized
/// by `V_oc`; `theta` is the P-SSHI blocking angle. All angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "topology", rename_all = "snake_case"))]
pub enum TuningPoint {
    Seh { vr: f64 },
    Sece { phi: f64 },
    SeriesSshi { phi: f64, vr: f64 },
    ParallelSshi { phi: f64, theta: f64 },
}

fn check_phi(phi: f64) -> Result<f64> {
    let half = PI / 2.0;
    if !phi.is_finite() || phi < -half - DOMAIN_EPS || phi > half + DOMAIN_EPS {
        return Err(Error::OutOfDomain { name: "phi", value: phi, lower: -half, upper: half });
    }
    Ok(phi.clamp(-half, half))
}

fn check_range(name: &'static str, value: f64, lower: f64, upper: f64) -> Result<f64> {
    if !value.is_finite() || value < lower - DOMAIN_EPS || value > upper + DOMAIN_EPS {
        return Err(Error::OutOfDomain { name, value, lower, upper });
    }
    Ok(value.clamp(lower, upper))
}

/// Valid Ṽ_r interval of S-SSHI at phase `phi`: `[0, cos φ]`. Above
/// `cos φ` the flip would have to push charge back out of the storage.
pub fn series_vr_domain(phi: f64) -> (f64, f64) {
    (0.0, phi.cos().max(0.0))
}

/// Valid blocking-angle interval of P-SSHI at phase `phi`.
///
/// Phase lead (`φ ≤ 0`): `[−φ, π + φ]`. Phase lag: `[arccos(2cos φ − 1), π]`.
pub fn parallel_theta_domain(phi: f64) -> (f64, f64) {
    if phi <= 0.0 {
        (-phi, PI + phi)
    } else {
        ((2.0 * phi.cos() - 1.0).clamp(-1.0, 1.0).acos(), PI)
    }
}

impl TuningPoint {
    /// SEH with normalized rectified voltage `vr ≥ 0`. Values above 1 are
    /// accepted: the diodes never conduct and the waveform is open-circuit.
    pub fn seh(vr: f64) -> Result<Self> {
        if !(vr.is_finite() && vr >= 0.0) {
            return Err(Error::OutOfDomain { name: "vr", value: vr, lower: 0.0, upper: f64::INFINITY });
        }
        Ok(TuningPoint::Seh { vr })
    }

    pub fn sece(phi: f64) -> Result<Self> {
        Ok(TuningPoint::Sece { phi: check_phi(phi)? })
    }

    pub fn series_sshi(phi: f64, vr: f64) -> Result<Self> {
        let phi = check_phi(phi)?;
        let (lo, hi) = series_vr_domain(phi);
        Ok(TuningPoint::SeriesSshi { phi, vr: check_range("vr", vr, lo, hi)? })
    }

    pub fn parallel_sshi(phi: f64, theta: f64) -> Result<Self> {
        let phi = check_phi(phi)?;
        let (lo, hi) = parallel_theta_domain(phi);
        let name = if phi <= 0.0 { "theta (phase lead: [-phi, pi+phi])" } else { "theta (phase lag: [acos(2cos(phi)-1), pi])" };
        Ok(TuningPoint::ParallelSshi { phi, theta: check_range(name, theta, lo, hi)? })
    }

    /// Builds a tuning from the phase and a fraction `s ∈ [0, 1]` of the
    /// second parameter's valid interval at that phase. Circuits without a
    /// phase ignore `phi`; SECE ignores `s`.
    pub fn from_fraction(topology: Topology, phi: f64, s: f64) -> Result<Self> {
        let s = check_range("fraction", s, 0.0, 1.0)?;
        match topology {
            Topology::Seh => Self::seh(s),
            Topology::Sece => Self::sece(phi),
            Topology::SeriesSshi => {
                let phi = check_phi(phi)?;
                let (lo, hi) = series_vr_domain(phi);
                Self::series_sshi(phi, lo + s * (hi - lo))
            }
            Topology::ParallelSshi => {
                let phi = check_phi(phi)?;
                let (lo, hi) = parallel_theta_domain(phi);
                Self::parallel_sshi(phi, lo + s * (hi - lo))
            }
        }
    }

    pub fn topology(&self) -> Topology {
        match self {
            TuningPoint::Seh { .. } => Topology::Seh,
            TuningPoint::Sece { .. } => Topology::Sece,
            TuningPoint::SeriesSshi { .. } => Topology::SeriesSshi,
            TuningPoint::ParallelSshi { .. } => Topology::ParallelSshi,
        }
    }

    pub fn phi(&self) -> f64 {
        match *self {
            TuningPoint::Seh { .. } => 0.0,
            TuningPoint::Sece { phi } | TuningPoint::SeriesSshi { phi, .. } | TuningPoint::ParallelSshi { phi, .. } => phi,
        }
    }

    /// Ṽ_r for SEH and S-SSHI, θ for P-SSHI, nothing for SECE.
    pub fn second(&self) -> Option<f64> {
        match *self {
            TuningPoint::Seh { vr } | TuningPoint::SeriesSshi { vr, .. } => Some(vr),
            TuningPoint::ParallelSshi { theta, .. } => Some(theta),
            TuningPoint::Sece { .. } => None,
        }
    }

    /// Normalized voltage the rectifier holds, where there is one.
    /// For P-SSHI it follows from θ through the interior voltages.
    pub fn rectified_voltage(&self, gamma: f64) -> Result<Option<f64>> {
        Ok(match *self {
            TuningPoint::Seh { vr } | TuningPoint::SeriesSshi { vr, .. } => Some(vr),
            TuningPoint::Sece { .. } => None,
            TuningPoint::ParallelSshi { phi, theta } => {
                let iv = solve_interior_p_sshi(phi, theta, gamma)?;
                Some(-iv.v1_tilde + phi.cos() - theta.cos())
            }
        })
    }
}

/// Normalized interior voltages of the flip actions: `Ṽ₀` before the
/// positive-to-negative flip and `Ṽ₁` right after it (signed).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InteriorVoltages {
    pub v0_tilde: f64,
    pub v1_tilde: f64,
}

/// Solves `[1 1; γ −1]·[Ṽ₀; Ṽ₁] = [r1; r2]`.
fn solve_flip_system(gamma: f64, r1: f64, r2: f64) -> Result<InteriorVoltages> {
    let det = 1.0 + gamma;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularFlipSystem);
    }
    let v0 = (r1 + r2) / det;
    Ok(InteriorVoltages { v0_tilde: v0, v1_tilde: r1 - v0 })
}

pub fn solve_interior_s_sshi(phi: f64, vr_tilde: f64, gamma: f64) -> Result<InteriorVoltages> {
    solve_flip_system(gamma, 2.0 * phi.cos(), (gamma - 1.0) * vr_tilde)
}

pub fn solve_interior_p_sshi(phi: f64, theta: f64, gamma: f64) -> Result<InteriorVoltages> {
    let phi = check_phi(phi)?;
    let (lo, hi) = parallel_theta_domain(phi);
    let name = if phi <= 0.0 { "theta (phase lead: [-phi, pi+phi])" } else { "theta (phase lag: [acos(2cos(phi)-1), pi])" };
    let theta = check_range(name, theta, lo, hi)?;
    let rhs = if phi <= 0.0 {
        phi.cos() - theta.cos()
    } else {
        2.0 * phi.cos() - theta.cos() - 1.0
    };
    solve_flip_system(gamma, rhs, 0.0)
}

/// `v_p / V_oc = offset + slope·cos(ωt)` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub offset: f64,
    pub slope: f64,
}

impl Segment {
    fn new(start: f64, end: f64, offset: f64, slope: f64) -> Self {
        Self { start, end, offset, slope }
    }

    /// Normalized value at angle `wt`.
    pub fn value(&self, wt: f64) -> f64 {
        self.offset + self.slope * wt.cos()
    }

    pub fn is_clamped(&self) -> bool {
        self.slope == 0.0
    }
}

/// One vibration cycle of the piezoelectric voltage.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PiecewiseVoltage {
    /// Tiles `[φ, φ + 2π)` in order.
    pub segments: Vec<Segment>,
    /// Open-circuit voltage `V_oc = I_h/(ωCp)` (V).
    pub voc: f64,
    pub topology: Topology,
    /// Normalized rectified voltage; zero for SECE.
    pub vr_tilde: f64,
    /// Set when an SEH tuning asks for `Ṽ_r > 1`: the diodes never conduct and
    /// the open-circuit waveform is returned instead.
    pub saturated: bool,
}

/// A discontinuity of `v_p` (normalized), at angle `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub at: f64,
    pub before: f64,
    pub after: f64,
}

impl PiecewiseVoltage {
    pub fn start(&self) -> f64 {
        self.segments[0].start
    }

    /// Segment index containing `wt` (any real angle, reduced modulo 2π).
    pub fn segment_at(&self, wt: f64) -> usize {
        let start = self.start();
        let mut t = (wt - start) % TAU;
        if t < 0.0 {
            t += TAU;
        }
        let t = start + t;
        self.segments.iter().position(|s| t < s.end).unwrap_or(self.segments.len() - 1)
    }

    /// `v_p(ωt) / V_oc`.
    pub fn normalized(&self, wt: f64) -> f64 {
        self.segments[self.segment_at(wt)].value(wt)
    }

    /// `v_p(ωt)` in volts.
    pub fn eval(&self, wt: f64) -> f64 {
        self.voc * self.normalized(wt)
    }

    /// Discontinuities between consecutive segments, including the wrap
    /// from the last segment back to the first. Normalized values.
    pub fn jumps(&self, tol: f64) -> Vec<Jump> {
        let n = self.segments.len();
        let mut out = Vec::new();
        for i in 0..n {
            let cur = &self.segments[i];
            let next = &self.segments[(i + 1) % n];
            let before = cur.value(cur.end);
            let after = next.value(next.start);
            if (before - after).abs() > tol {
                out.push(Jump { at: cur.end, before, after });
            }
        }
        out
    }

    /// Boundaries of all segments plus the period end.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        b.push(self.start() + TAU);
        b
    }

    fn scaled(mut self, voc: f64) -> Self {
        self.voc = voc;
        self
    }
}

fn assemble(topology: Topology, vr_tilde: f64, raw: &[Segment]) -> PiecewiseVoltage {
    let segments = raw.iter().copied().filter(|s| s.end - s.start > 1e-15).collect();
    PiecewiseVoltage { segments, voc: 1.0, topology, vr_tilde, saturated: false }
}

/// Builds the steady-state waveform of `tuning` for flipping factor `gamma`
/// and open-circuit voltage `voc`.
pub fn synthesize_vp(tuning: &TuningPoint, gamma: f64, voc: f64) -> Result<PiecewiseVoltage> {
    if !(voc.is_finite() && voc > 0.0) {
        return Err(Error::InvalidParameter { name: "voc", value: voc, reason: "must be finite and > 0" });
    }
    let wave = match *tuning {
        TuningPoint::Seh { vr } => {
            if vr >= 1.0 {
                let mut w = assemble(Topology::Seh, vr, &[Segment::new(0.0, PI, 0.0, -1.0), Segment::new(PI, TAU, 0.0, -1.0)]);
                w.saturated = vr > 1.0;
                w
            } else {
                let theta = (1.0 - 2.0 * vr).acos();
                assemble(
                    Topology::Seh,
                    vr,
                    &[
                        Segment::new(0.0, theta, 1.0 - vr, -1.0),
                        Segment::new(theta, PI, vr, 0.0),
                        Segment::new(PI, PI + theta, vr - 1.0, -1.0),
                        Segment::new(PI + theta, TAU, -vr, 0.0),
                    ],
                )
            }
        }
        TuningPoint::Sece { phi } => {
            let c = phi.cos();
            assemble(
                Topology::Sece,
                0.0,
                &[Segment::new(phi, PI + phi, c, -1.0), Segment::new(PI + phi, TAU + phi, -c, -1.0)],
            )
        }
        TuningPoint::SeriesSshi { phi, vr } => {
            let iv = solve_interior_s_sshi(phi, vr, gamma)?;
            let a = phi.cos() - iv.v1_tilde;
            assemble(
                Topology::SeriesSshi,
                vr,
                &[Segment::new(phi, PI + phi, a, -1.0), Segment::new(PI + phi, TAU + phi, -a, -1.0)],
            )
        }
        TuningPoint::ParallelSshi { phi, theta } => {
            let iv = solve_interior_p_sshi(phi, theta, gamma)?;
            let c = phi.cos();
            let ct = theta.cos();
            let a = c - iv.v1_tilde;
            let clamp = a - ct;
            if phi <= 0.0 {
                assemble(
                    Topology::ParallelSshi,
                    clamp,
                    &[
                        Segment::new(phi, theta, a, -1.0),
                        Segment::new(theta, PI + phi, clamp, 0.0),
                        Segment::new(PI + phi, PI + theta, -a, -1.0),
                        Segment::new(PI + theta, TAU + phi, -clamp, 0.0),
                    ],
                )
            } else {
                assemble(
                    Topology::ParallelSshi,
                    clamp,
                    &[
                        Segment::new(phi, theta, a, -1.0),
                        Segment::new(theta, PI, clamp, 0.0),
                        Segment::new(PI, PI + phi, clamp - 1.0, -1.0),
                        Segment::new(PI + phi, PI + theta, -a, -1.0),
                        Segment::new(PI + theta, TAU, -clamp, 0.0),
                        Segment::new(TAU, TAU + phi, 1.0 - clamp, -1.0),
                    ],
                )
            }
        }
    };
    Ok(wave.scaled(voc))
}

/// Normalized `(e_h, e_d)` per cycle in units of `Cp·V_oc²`.
pub(crate) fn energy_split_normalized(wave: &PiecewiseVoltage) -> (f64, f64) {
    let mut harvested = 0.0;
    let mut dissipated = 0.0;
    // Charge through the rectifier while clamped. q̃ = −cos(ωt).
    for s in wave.segments.iter().filter(|s| s.is_clamped()) {
        let dq = s.end.cos() - s.start.cos();
        harvested += (-s.offset * dq).max(0.0);
    }
    for j in wave.jumps(1e-14) {
        let released = 0.5 * (j.before * j.before - j.after * j.after);
        match wave.topology {
            Topology::Sece => harvested += released,
            Topology::SeriesSshi => {
                let delivered = wave.vr_tilde * (j.before - j.after).abs();
                harvested += delivered;
                dissipated += released - delivered;
            }
            Topology::Seh | Topology::ParallelSshi => dissipated += released,
        }
    }
    (harvested, dissipated)
}

/// Harvested and dissipated energy per cycle (J) for a current amplitude
/// `i_h_mag` (A) at `omega` (rad/s).
///
/// SEH and P-SSHI harvest `V_r` times the rectifier charge and lose the flip
/// energy; S-SSHI harvests `V_r` times the charge moved by each flip and loses
/// the rest of the released flip energy; SECE harvests all extracted energy.
pub fn energy_split(wave: &PiecewiseVoltage, i_h_mag: f64, omega: f64) -> (f64, f64) {
    let scale = wave.voc * i_h_mag / omega;
    let (eh, ed) = energy_split_normalized(wave);
    (eh * scale, ed * scale)
}

/// Closed `(v_p, q)` trajectory over one period with its enclosed area.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorkCycle {
    /// `(v_p [V], q [C])` vertices, jumps included as vertical edges.
    pub trajectory: Vec<(f64, f64)>,
    /// `∮ v_p dq` (J per cycle).
    pub area: f64,
    pub e_h: f64,
    pub e_d: f64,
}

/// Minimum number of trajectory samples per period.
pub const WORK_CYCLE_SAMPLES: usize = 2048;

pub fn work_cycle(wave: &PiecewiseVoltage, i_h_mag: f64, omega: f64) -> WorkCycle {
    let q_amp = i_h_mag / omega;
    let mut trajectory = Vec::with_capacity(WORK_CYCLE_SAMPLES + 2 * wave.segments.len());
    for s in &wave.segments {
        let n = (((s.end - s.start) / TAU) * WORK_CYCLE_SAMPLES as f64).ceil().max(1.0) as usize;
        for k in 0..=n {
            let t = s.start + (s.end - s.start) * k as f64 / n as f64;
            trajectory.push((wave.voc * s.value(t), -q_amp * t.cos()));
        }
    }
    // Shoelace with v on the horizontal axis gives ∮ v dq.
    let n = trajectory.len();
    let mut twice = 0.0;
    for i in 0..n {
        let (x0, y0) = trajectory[i];
        let (x1, y1) = trajectory[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    let (e_h, e_d) = energy_split(wave, i_h_mag, omega);
    WorkCycle { trajectory, area: 0.5 * twice, e_h, e_d }
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = -0.6;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn s_sshi_interior_examples() {
        let iv = solve_interior_s_sshi(0.0, 0.0, G).unwrap();
        assert!(close(iv.v0_tilde, 5.0, 1e-14) && close(iv.v1_tilde, -3.0, 1e-14), "{iv:?}");
        let iv = solve_interior_s_sshi(0.0, 1.0, G).unwrap();
        assert!(close(iv.v0_tilde, 1.0, 1e-14) && close(iv.v1_tilde, 1.0, 1e-14), "{iv:?}");
        for vr in [0.0, 0.3, 0.7] {
            for g in [-0.9, -0.6, 0.0, 0.5] {
                let iv = solve_interior_s_sshi(0.4, vr, g).unwrap();
                assert!(close(iv.v0_tilde + iv.v1_tilde, 2.0 * 0.4f64.cos(), 1e-14));
                assert!(close(g * iv.v0_tilde - iv.v1_tilde, (g - 1.0) * vr, 1e-14));
            }
        }
        assert_eq!(solve_interior_s_sshi(0.0, 0.0, -1.0), Err(Error::SingularFlipSystem));
    }

    #[test]
    fn p_sshi_interior_examples() {
        let iv = solve_interior_p_sshi(0.0, PI, G).unwrap();
        assert!(close(iv.v0_tilde, 5.0, 1e-14) && close(iv.v1_tilde, -3.0, 1e-14));
        let iv = solve_interior_p_sshi(0.0, 0.0, G).unwrap();
        assert_eq!((iv.v0_tilde, iv.v1_tilde), (0.0, 0.0));
        for (phi, theta) in [(-0.5, 1.0), (-0.1, 2.9), (0.3, 2.0), (1.2, 3.0)] {
            let iv = solve_interior_p_sshi(phi, theta, G).unwrap();
            assert!(close(iv.v1_tilde, G * iv.v0_tilde, 1e-14));
        }
    }

    #[test]
    fn p_sshi_rejects_out_of_domain_theta() {
        let err = solve_interior_p_sshi(-0.5, 0.2, G).unwrap_err();
        match err {
            Error::OutOfDomain { name, lower, .. } => {
                assert!(name.contains("phase lead"));
                assert!(close(lower, 0.5, 1e-15));
            }
            e => panic!("unexpected {e:?}"),
        }
        let err = solve_interior_p_sshi(0.5, 0.1, G).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { name, .. } if name.contains("phase lag")));
        assert!(TuningPoint::parallel_sshi(0.5, PI + 0.1).is_err());
    }

    #[test]
    fn tuning_domains() {
        assert!(TuningPoint::series_sshi(0.0, -0.1).is_err());
        assert!(TuningPoint::series_sshi(1.0, 1.0f64.cos() + 1e-6).is_err());
        assert!(TuningPoint::sece(2.0).is_err());
        assert!(TuningPoint::seh(-0.1).is_err());
        assert!(TuningPoint::seh(1.5).is_ok());
        let t = TuningPoint::from_fraction(Topology::ParallelSshi, 0.4, 1.0).unwrap();
        assert_eq!(t.second(), Some(PI));
        let t = TuningPoint::from_fraction(Topology::ParallelSshi, -0.4, 0.0).unwrap();
        assert!(close(t.second().unwrap(), 0.4, 1e-15));
    }

    #[test]
    fn sece_in_phase_waveform() {
        let w = synthesize_vp(&TuningPoint::sece(0.0).unwrap(), G, 1.0).unwrap();
        assert_eq!(w.segments.len(), 2);
        assert!(close(w.normalized(0.0), 0.0, 1e-15));
        assert!(close(w.normalized(PI - 1e-9), 2.0, 1e-12));
        assert!(close(w.normalized(PI / 2.0), 1.0, 1e-15));
        assert_eq!(w.jumps(1e-12).len(), 2);
    }

    #[test]
    fn s_sshi_short_circuit_flip_values() {
        let w = synthesize_vp(&TuningPoint::series_sshi(0.0, 0.0).unwrap(), G, 1.0).unwrap();
        assert_eq!(w.segments.len(), 2);
        let jumps = w.jumps(1e-12);
        assert_eq!(jumps.len(), 2);
        // Positive-to-negative flip at ωt = π: Ṽ₀ = 5 → Ṽ₁ = −3.
        let at_pi = jumps.iter().find(|j| close(j.at, PI, 1e-12)).unwrap();
        assert!(close(at_pi.before, 5.0, 1e-12) && close(at_pi.after, -3.0, 1e-12), "{at_pi:?}");
        // And the mirror flip at 2π: −5 → +3.
        let at_2pi = jumps.iter().find(|j| close(j.at, TAU, 1e-12)).unwrap();
        assert!(close(at_2pi.before, -5.0, 1e-12) && close(at_2pi.after, 3.0, 1e-12));
    }

    #[test]
    fn seh_short_circuit_is_zero() {
        let w = synthesize_vp(&TuningPoint::seh(0.0).unwrap(), G, 1.0).unwrap();
        for k in 0..100 {
            assert!(w.normalized(k as f64 * 0.0631).abs() < 1e-15);
        }
    }

    #[test]
    fn seh_above_unity_is_open_circuit_with_flag() {
        let w = synthesize_vp(&TuningPoint::seh(1.3).unwrap(), G, 1.0).unwrap();
        assert!(w.saturated);
        for k in 0..50 {
            let t = k as f64 * 0.13;
            assert!(close(w.normalized(t), -t.cos(), 1e-15));
        }
        let w1 = synthesize_vp(&TuningPoint::seh(1.0).unwrap(), G, 1.0).unwrap();
        assert!(!w1.saturated);
    }

    #[test]
    fn segment_counts() {
        let lead = synthesize_vp(&TuningPoint::parallel_sshi(-0.3, 1.5).unwrap(), G, 1.0).unwrap();
        assert_eq!(lead.segments.len(), 4);
        let lag = synthesize_vp(&TuningPoint::parallel_sshi(0.3, 2.0).unwrap(), G, 1.0).unwrap();
        assert_eq!(lag.segments.len(), 6);
        let ss = synthesize_vp(&TuningPoint::series_sshi(0.3, 0.2).unwrap(), G, 1.0).unwrap();
        assert_eq!(ss.segments.len(), 2);
    }

    #[test]
    fn open_circuit_extremes_coincide() {
        for phi in [-1.2, -0.4, 0.0, 0.5, 1.3] {
            let s = synthesize_vp(&TuningPoint::series_sshi(phi, 0.0).unwrap(), G, 1.0).unwrap();
            let (_, hi) = parallel_theta_domain(phi);
            let p = synthesize_vp(&TuningPoint::parallel_sshi(phi, hi).unwrap(), G, 1.0).unwrap();
            for k in 0..400 {
                let t = phi + 0.001 + k as f64 * TAU / 400.0;
                assert!(close(s.normalized(t), p.normalized(t), 1e-12), "phi {phi} t {t}");
            }
        }
    }

    #[test]
    fn sece_matches_extraction_energy() {
        let w = synthesize_vp(&TuningPoint::sece(0.3).unwrap(), G, 2.0).unwrap();
        let (eh, ed) = energy_split_normalized(&w);
        assert_eq!(ed, 0.0);
        assert!(close(eh, 4.0 * 0.3f64.cos().powi(2), 1e-13));
    }

    #[test]
    fn s_sshi_zero_vr_harvests_nothing() {
        let w = synthesize_vp(&TuningPoint::series_sshi(0.2, 0.0).unwrap(), G, 1.0).unwrap();
        let wc = work_cycle(&w, 1e-3, 300.0);
        assert_eq!(wc.e_h, 0.0);
        assert!(((wc.e_d - wc.area) / wc.area).abs() < 1e-3);
    }

    #[test]
    fn capacitor_encloses_no_area() {
        let w = synthesize_vp(&TuningPoint::seh(1.0).unwrap(), G, 1.0).unwrap();
        let wc = work_cycle(&w, 1e-3, 300.0);
        assert!(wc.area.abs() < 1e-15, "{}", wc.area);
        assert_eq!((wc.e_h, wc.e_d), (0.0, 0.0));
    }

    #[test]
    fn p_sshi_unit_gamma_reduces_to_seh() {
        for theta in [0.3, 1.0, 2.0, 2.9] {
            let p = synthesize_vp(&TuningPoint::parallel_sshi(0.0, theta).unwrap(), 1.0, 1.0).unwrap();
            let vr = (1.0 - theta.cos()) / 2.0;
            let s = synthesize_vp(&TuningPoint::seh(vr).unwrap(), 1.0, 1.0).unwrap();
            assert!(close(p.vr_tilde, vr, 1e-14));
            let (ph, pd) = energy_split_normalized(&p);
            let (sh, sd) = energy_split_normalized(&s);
            assert!(close(ph, sh, 1e-13) && close(pd, sd, 1e-13) && pd.abs() < 1e-13);
        }
    }

    #[test]
    fn work_cycle_has_enough_samples() {
        let w = synthesize_vp(&TuningPoint::sece(0.0).unwrap(), G, 1.0).unwrap();
        assert!(work_cycle(&w, 1.0, 1.0).trajectory.len() >= 1024);
    }
}
