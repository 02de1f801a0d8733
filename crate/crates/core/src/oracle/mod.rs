//! Time-domain simulation of the coupled electromechanical system with
//! synchronized switching, used to cross-check the harmonic-balance model.
//!
//! The state is integrated with fixed-step RK4. Rectifier conduction changes,
//! velocity zero crossings and scheduled switch instants are located exactly
//! (bisection for the first two) and handled as discrete transitions. Energy
//! flows are integrated alongside the state so every cycle closes its own
//! ledger.

mod rk4;

pub use rk4::{bisect_crossing, step as rk4_step};

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::power::operating_point;
use crate::system::{check_omega, PehSystem};
use crate::waveform::{Topology, TuningPoint};
use crate::Complex64;

/// Signal whose zero crossings time the synchronized switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SyncSource {
    /// Zero crossings of the mass velocity, located on the integrated state.
    Velocity,
    /// Zero crossings of the fundamental of the current into `Cp` and the
    /// interface (the branch behind `Rp`). Velocity crossings are shifted by
    /// the lead of that fundamental over `αẋ`, measured on the previous cycle,
    /// so the timing reference itself never lags. Identical to `Velocity`
    /// when `Rp` is infinite.
    CurrentFundamental,
}

/// Finite storage capacitor with a resistive load, replacing the ideal
/// constant rectified voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Storage {
    pub capacitance: f64,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimOptions {
    pub steps_per_cycle: usize,
    pub max_cycles: usize,
    /// Relative cycle-to-cycle change of input and harvested power that
    /// counts as settled.
    pub tolerance: f64,
    /// Consecutive settled cycles required to stop.
    pub settle_cycles: usize,
    /// Cycles averaged by [`steady_state_power`].
    pub average_cycles: usize,
    /// Cycles whose samples and events are kept in the trace.
    pub record_cycles: usize,
    pub sync: SyncSource,
    /// Event location accuracy as a fraction of the period.
    pub event_tolerance: f64,
    /// Total forward drop of the conducting rectifier path (V).
    pub diode_drop: f64,
    pub storage: Option<Storage>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            steps_per_cycle: 4096,
            max_cycles: 400,
            tolerance: 1e-3,
            settle_cycles: 10,
            average_cycles: 10,
            record_cycles: 2,
            sync: SyncSource::CurrentFundamental,
            event_tolerance: 1e-10,
            diode_drop: 0.0,
            storage: None,
        }
    }
}

/// Interface circuit as the simulator sees it: absolute rectified voltage
/// instead of normalized tunings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Circuit {
    /// `None` leaves the piezoelectric element open.
    pub topology: Option<Topology>,
    pub phi: f64,
    /// Rectified voltage (V). Unused by SECE and open circuits.
    pub vr: f64,
    /// Velocity phasor used as the initial condition. When absent the
    /// linear open-circuit steady state is used.
    pub initial_velocity: Option<Complex64>,
}

impl Circuit {
    pub fn open() -> Self {
        Self { topology: None, phi: 0.0, vr: 0.0, initial_velocity: None }
    }

    pub fn new(topology: Topology, phi: f64, vr: f64) -> Result<Self> {
        if !(vr.is_finite() && vr >= 0.0) {
            return Err(Error::InvalidParameter { name: "vr", value: vr, reason: "must be finite and >= 0" });
        }
        if !(phi.abs() <= PI / 2.0 + 1e-12) {
            return Err(Error::OutOfDomain { name: "phi", value: phi, lower: -PI / 2.0, upper: PI / 2.0 });
        }
        Ok(Self { topology: Some(topology), phi, vr, initial_velocity: None })
    }

    /// Maps an analytic tuning to absolute voltages through the
    /// harmonic-balance operating point, which also seeds the initial state.
    pub fn from_tuning(sys: &PehSystem, tuning: &TuningPoint, omega: f64) -> Result<Self> {
        let op = operating_point(sys, tuning, omega)?;
        let vr = op.rectified_voltage(sys.gamma())?.unwrap_or(0.0);
        Ok(Self {
            topology: Some(tuning.topology()),
            phi: tuning.phi(),
            vr,
            initial_velocity: Some(op.velocity),
        })
    }

    fn has_clamp(&self) -> bool {
        matches!(self.topology, Some(Topology::Seh | Topology::ParallelSshi))
    }

    fn is_switched(&self) -> bool {
        matches!(self.topology, Some(Topology::Sece | Topology::SeriesSshi | Topology::ParallelSshi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RectifierState {
    Blocked,
    Positive,
    Negative,
}

impl RectifierState {
    fn sign(self) -> f64 {
        match self {
            RectifierState::Blocked => 0.0,
            RectifierState::Positive => 1.0,
            RectifierState::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EventKind {
    Flip,
    Extraction,
    ConductionOn,
    ConductionOff,
    VelocityCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub v_before: f64,
    pub v_after: f64,
    /// Energy dissipated by the event (J).
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    pub vp: f64,
    pub vr: f64,
    pub rectifier: RectifierState,
}

/// Energy and harmonic content of one excitation cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CycleLedger {
    pub input: f64,
    pub mechanical: f64,
    pub dielectric: f64,
    pub flip: f64,
    pub harvested: f64,
    pub diode: f64,
    /// Change of stored kinetic, elastic and electric energy over the cycle.
    pub stored_change: f64,
    /// Fundamental of `v_p` (phasor, V).
    pub v_fundamental: Complex64,
    /// Fundamental of `αẋ − v_p/Rp` (phasor, A).
    pub i_fundamental: Complex64,
    /// Total harmonic distortion of `αẋ`.
    pub thd: f64,
}

impl CycleLedger {
    pub fn sinks(&self) -> f64 {
        self.mechanical + self.dielectric + self.flip + self.harvested + self.diode
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SimStatus {
    Converged,
    MaxCyclesReached,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimTrace {
    pub omega: f64,
    pub status: SimStatus,
    pub cycles: usize,
    /// Samples of the last recorded cycles.
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    /// One entry per simulated cycle.
    pub ledger: Vec<CycleLedger>,
    pub average_cycles: usize,
}

impl SimTrace {
    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    fn tail(&self) -> &[CycleLedger] {
        let n = self.average_cycles.max(1).min(self.ledger.len());
        &self.ledger[self.ledger.len() - n..]
    }
}

// State layout.
const X: usize = 0;
const XD: usize = 1;
const V: usize = 2;
const VR: usize = 3;
const W_IN: usize = 4;
const E_MECH: usize = 5;
const E_RP: usize = 6;
const E_HARV: usize = 7;
const E_DIODE: usize = 8;
const E_FLIP: usize = 9;
const S_XS: usize = 10;
const S_XC: usize = 11;
const S_VS: usize = 12;
const S_VC: usize = 13;
const S_X2: usize = 14;
const S_X1: usize = 15;
const N: usize = 16;

type State = [f64; N];

struct Model {
    m: f64,
    k: f64,
    d: f64,
    alpha: f64,
    cp: f64,
    /// `1/Rp`, zero without leakage.
    gp: f64,
    force: f64,
    omega: f64,
    drop: f64,
    storage: Option<Storage>,
}

impl Model {
    fn clamp_level(&self, vr: f64) -> f64 {
        vr + self.drop
    }

    fn rhs(&self, t: f64, y: &State, mode: RectifierState) -> State {
        let (s, c) = (self.omega * t).sin_cos();
        let xd = y[XD];
        let v = y[V];
        let f = self.force * s;
        let mut dy = [0.0; N];
        dy[X] = xd;
        dy[XD] = (f - self.d * xd - self.k * y[X] - self.alpha * v) / self.m;
        let i_net = self.alpha * xd - v * self.gp;
        match mode {
            RectifierState::Blocked => {
                dy[V] = i_net / self.cp;
                if let Some(st) = self.storage {
                    dy[VR] = -y[VR] / (st.load * st.capacitance);
                }
            }
            clamp => {
                let sg = clamp.sign();
                let i_rect = match self.storage {
                    None => sg * i_net,
                    Some(st) => {
                        let dvr = (sg * i_net - y[VR] / st.load) / (self.cp + st.capacitance);
                        dy[VR] = dvr;
                        dy[V] = sg * dvr;
                        sg * i_net - self.cp * dvr
                    }
                };
                dy[E_HARV] = y[VR] * i_rect;
                dy[E_DIODE] = self.drop * i_rect;
            }
        }
        let ix = self.alpha * xd;
        dy[W_IN] = f * xd;
        dy[E_MECH] = self.d * xd * xd;
        dy[E_RP] = v * v * self.gp;
        dy[S_XS] = ix * s;
        dy[S_XC] = ix * c;
        dy[S_VS] = v * s;
        dy[S_VC] = v * c;
        dy[S_X2] = ix * ix;
        dy[S_X1] = ix;
        dy
    }

    /// Rectifier current while clamped; conduction ends when it turns negative.
    fn clamp_current(&self, y: &State, mode: RectifierState) -> f64 {
        let sg = mode.sign();
        let i_net = sg * (self.alpha * y[XD] - y[V] * self.gp);
        match self.storage {
            None => i_net,
            Some(st) => (st.capacitance * i_net + self.cp * y[VR] / st.load) / (self.cp + st.capacitance),
        }
    }

    fn stored(&self, y: &State) -> f64 {
        let vr_energy = self.storage.map_or(0.0, |st| 0.5 * st.capacitance * y[VR] * y[VR]);
        0.5 * self.m * y[XD] * y[XD] + 0.5 * self.k * y[X] * y[X] + 0.5 * self.cp * y[V] * y[V] + vr_energy
    }

    /// Charges the storage with `energy`; the constant-voltage sink needs no update.
    fn deliver(&self, y: &mut State, energy: f64) {
        y[E_HARV] += energy;
        if let Some(st) = self.storage {
            y[VR] = (y[VR] * y[VR] + 2.0 * energy / st.capacitance).sqrt();
        }
    }
}

/// Linear steady state with the electrical side open except for `Cp ∥ Rp`:
/// returns the velocity phasor.
fn open_circuit_velocity(sys: &PehSystem, omega: f64) -> Complex64 {
    let zm = sys.mechanical_impedance(omega).map(|z| z.value).unwrap_or_default();
    let yc = Complex64::new(1.0 / sys.rp(), omega * sys.cp());
    Complex64::new(sys.excitation_force(), 0.0) / (zm + sys.alpha_sq() / yc)
}

/// Initial state `(x, ẋ, v_p)` at `t = 0` from a velocity phasor. A phasor
/// `a + jb` stands for `a·sin(ωt) + b·cos(ωt)`.
fn initial_state(sys: &PehSystem, omega: f64, vel: Complex64) -> (f64, f64, f64) {
    let x0 = -vel.re / omega;
    let xd0 = vel.im;
    let yc = Complex64::new(1.0 / sys.rp(), omega * sys.cp());
    let vp = vel * sys.alpha() / yc;
    (x0, xd0, vp.im)
}


fn wrap_angle(a: f64) -> f64 {
    let r = a % TAU;
    if r < 0.0 { r + TAU } else { r }
}

struct Integrator<'a> {
    model: Model,
    circuit: Circuit,
    gamma: f64,
    opts: &'a SimOptions,
    period: f64,
    h: f64,
    t: f64,
    y: State,
    mode: RectifierState,
    pending: VecDeque<f64>,
    last_switch: f64,
    last_crossing: Option<(f64, f64)>,
    /// Phase lead of the branch-current fundamental over `αẋ` (rad).
    lead: f64,
    events: Vec<EventRecord>,
    samples: Vec<Sample>,
}

impl<'a> Integrator<'a> {
    fn f(&self) -> impl Fn(f64, &State) -> State + '_ {
        let mode = self.mode;
        move |t, y| self.model.rhs(t, y, mode)
    }

    fn record_sample(&mut self) {
        self.samples.push(Sample {
            t: self.t,
            x: self.y[X],
            xdot: self.y[XD],
            vp: self.y[V],
            vr: self.y[VR],
            rectifier: self.mode,
        });
    }

    fn push_event(&mut self, kind: EventKind, v_before: f64, loss: f64) {
        self.events.push(EventRecord { t: self.t, kind, v_before, v_after: self.y[V], loss });
    }

    /// Enters conduction if the voltage sits at or beyond the clamp level.
    fn settle_rectifier(&mut self) {
        if !self.circuit.has_clamp() || self.mode != RectifierState::Blocked {
            return;
        }
        let level = self.model.clamp_level(self.y[VR]);
        let v = self.y[V];
        if v.abs() >= level && v != 0.0 {
            let before = v;
            self.mode = if v > 0.0 { RectifierState::Positive } else { RectifierState::Negative };
            self.y[V] = self.mode.sign() * level;
            self.push_event(EventKind::ConductionOn, before, 0.0);
        }
    }

    /// The synchronized switch action.
    fn switch(&mut self) {
        let Some(topology) = self.circuit.topology else { return };
        let cp = self.model.cp;
        let v = self.y[V];
        match topology {
            Topology::Sece => {
                self.model.deliver(&mut self.y, 0.5 * cp * v * v);
                self.y[V] = 0.0;
                self.push_event(EventKind::Extraction, v, 0.0);
            }
            Topology::SeriesSshi => {
                let vr = self.y[VR];
                let level = self.model.clamp_level(vr);
                if v.abs() <= level {
                    return;
                }
                let s = v.signum();
                let after = s * level + self.gamma * (v - s * level);
                let dq = cp * (v - after).abs();
                let released = 0.5 * cp * (v * v - after * after);
                let loss = released - level * dq;
                self.y[V] = after;
                self.y[E_DIODE] += self.model.drop * dq;
                self.y[E_FLIP] += loss;
                self.model.deliver(&mut self.y, vr * dq);
                self.push_event(EventKind::Flip, v, loss);
            }
            Topology::ParallelSshi => {
                let after = self.gamma * v;
                let loss = 0.5 * cp * (v * v - after * after);
                self.y[V] = after;
                self.y[E_FLIP] += loss;
                if self.mode != RectifierState::Blocked {
                    self.mode = RectifierState::Blocked;
                }
                self.push_event(EventKind::Flip, v, loss);
            }
            Topology::Seh => {}
        }
        self.last_switch = self.t;
    }

    fn schedule(&mut self, t_event: f64) {
        if t_event - self.last_switch < 0.3 * self.period && self.last_switch.is_finite() {
            return;
        }
        if let Some(&last) = self.pending.back() {
            if t_event - last < 0.3 * self.period {
                return;
            }
        }
        self.pending.push_back(t_event);
    }

    fn velocity_crossing(&mut self) {
        // The state sits just past the crossing, so the sign is the new direction.
        let dir = self.y[XD].signum();
        if let Some((t_prev, d_prev)) = self.last_crossing {
            if d_prev == dir || self.t - t_prev < 0.3 * self.period {
                return;
            }
        }
        self.last_crossing = Some((self.t, dir));
        let v = self.y[V];
        self.push_event(EventKind::VelocityCrossing, v, 0.0);
        let phi = match self.opts.sync {
            SyncSource::Velocity => self.circuit.phi,
            SyncSource::CurrentFundamental => self.circuit.phi - self.lead,
        };
        let delay = if phi >= 0.0 { phi } else { PI + phi } / self.model.omega;
        if delay == 0.0 {
            self.switch();
        } else {
            self.schedule(self.t + delay);
        }
    }

    /// Advances to `t_end`, handling every transition on the way.
    fn run_to(&mut self, t_end: f64, record: bool) {
        let tol = self.opts.event_tolerance * self.period;
        while t_end - self.t > 1e-12 * self.period {
            let next_switch = self.pending.front().copied().unwrap_or(f64::INFINITY);
            let mut h = self.h.min(t_end - self.t);
            let mut hits_switch = false;
            if next_switch - self.t <= h {
                h = (next_switch - self.t).max(0.0);
                hits_switch = true;
            }
            let y1 = if h > 0.0 { rk4::step(&self.f(), self.t, &self.y, h) } else { self.y };

            // Candidate state-dependent transitions within this step.
            let mut best: Option<(f64, State, u8)> = None;
            let consider = |tau: f64, y: State, tag: u8, best: &mut Option<(f64, State, u8)>| {
                if best.as_ref().is_none_or(|b| tau < b.0) {
                    *best = Some((tau, y, tag));
                }
            };
            if h > 0.0 {
                if self.circuit.has_clamp() {
                    if self.mode == RectifierState::Blocked {
                        let level = self.model.clamp_level(self.y[VR]);
                        let lv = self.model.clamp_level(y1[VR]);
                        if y1[V].abs() >= lv {
                            let g = |_: f64, y: &State| self.model.clamp_level(y[VR]) - y[V].abs();
                            if self.y[V].abs() < level {
                                let (tau, y) = rk4::bisect_crossing(&self.f(), &g, self.t, &self.y, h, tol);
                                consider(tau, y, 0, &mut best);
                            }
                        }
                    } else if self.model.clamp_current(&y1, self.mode) < 0.0 {
                        let mode = self.mode;
                        let g = |_: f64, y: &State| self.model.clamp_current(y, mode);
                        let (tau, y) = rk4::bisect_crossing(&self.f(), &g, self.t, &self.y, h, tol);
                        consider(tau, y, 1, &mut best);
                    }
                }
                if self.circuit.is_switched() && self.y[XD] != 0.0 && (y1[XD] == 0.0 || y1[XD].signum() != self.y[XD].signum()) {
                    let s0 = self.y[XD].signum();
                    let g = |_: f64, y: &State| s0 * y[XD];
                    let (tau, y) = rk4::bisect_crossing(&self.f(), &g, self.t, &self.y, h, tol);
                    consider(tau, y, 2, &mut best);
                }
            }

            match best {
                Some((tau, y, tag)) => {
                    self.t += tau;
                    self.y = y;
                    match tag {
                        0 => {
                            let before = self.y[V];
                            self.mode = if before > 0.0 { RectifierState::Positive } else { RectifierState::Negative };
                            self.y[V] = self.mode.sign() * self.model.clamp_level(self.y[VR]);
                            self.push_event(EventKind::ConductionOn, before, 0.0);
                        }
                        1 => {
                            let prev = self.mode;
                            self.mode = RectifierState::Blocked;
                            let v = self.y[V];
                            self.push_event(EventKind::ConductionOff, v, 0.0);
                            if self.model.clamp_level(self.y[VR]) <= 0.0 {
                                // A zero clamp level hands conduction straight to the other diode pair.
                                self.mode = if prev == RectifierState::Positive { RectifierState::Negative } else { RectifierState::Positive };
                            }
                        }
                        _ => self.velocity_crossing(),
                    }
                }
                None => {
                    self.t += h;
                    self.y = y1;
                    if hits_switch {
                        self.pending.pop_front();
                        self.switch();
                        self.settle_rectifier();
                    }
                }
            }
            if record {
                self.record_sample();
            }
        }
        self.t = t_end;
    }
}

/// Scale for harvested-energy changes: the harvest itself, floored so that
/// runs which harvest next to nothing can still settle.
fn harvest_scale(input: f64, harvested: f64) -> f64 {
    harvested.abs().max(1e-6 * input.abs()).max(f64::MIN_POSITIVE)
}

fn fundamental(s: f64, c: f64, omega: f64) -> Complex64 {
    Complex64::new(s, c) * (omega / PI)
}

/// Integrates the coupled system driven at `omega` until the per-cycle power
/// settles or `max_cycles` is reached. A trace that did not settle is still
/// returned, marked [`SimStatus::MaxCyclesReached`].
pub fn simulate(sys: &PehSystem, circuit: &Circuit, omega: f64, opts: &SimOptions) -> Result<SimTrace> {
    check_omega(omega)?;
    if opts.steps_per_cycle < 16 || opts.max_cycles == 0 || !(opts.tolerance > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sim options",
            value: opts.steps_per_cycle as f64,
            reason: "need >= 16 steps per cycle, >= 1 cycle and a positive tolerance",
        });
    }
    if let Some(st) = opts.storage {
        if !(st.capacitance > 0.0 && st.load > 0.0) {
            return Err(Error::InvalidParameter { name: "storage", value: st.capacitance, reason: "capacitance and load must be > 0" });
        }
    }
    if !(opts.diode_drop >= 0.0) {
        return Err(Error::InvalidParameter { name: "diode_drop", value: opts.diode_drop, reason: "must be >= 0" });
    }
    let period = TAU / omega;
    let model = Model {
        m: sys.mass(),
        k: sys.stiffness(),
        d: sys.damping(),
        alpha: sys.alpha(),
        cp: sys.cp(),
        gp: if sys.rp().is_infinite() { 0.0 } else { 1.0 / sys.rp() },
        force: sys.excitation_force(),
        omega,
        drop: if circuit.topology.is_some() { opts.diode_drop } else { 0.0 },
        storage: opts.storage,
    };
    let vel = circuit.initial_velocity.unwrap_or_else(|| open_circuit_velocity(sys, omega));
    let (x0, xd0, v0) = initial_state(sys, omega, vel);
    let mut y = [0.0; N];
    y[X] = x0;
    y[XD] = xd0;
    y[V] = v0;
    y[VR] = if circuit.topology == Some(Topology::Sece) && opts.storage.is_none() { 0.0 } else { circuit.vr };

    let mut it = Integrator {
        model,
        circuit: *circuit,
        gamma: sys.gamma(),
        opts,
        period,
        h: period / opts.steps_per_cycle as f64,
        t: 0.0,
        y,
        mode: RectifierState::Blocked,
        pending: VecDeque::new(),
        last_switch: f64::NEG_INFINITY,
        last_crossing: None,
        lead: 0.0,
        events: Vec::new(),
        samples: Vec::new(),
    };
    it.settle_rectifier();

    let mut ledger: Vec<CycleLedger> = Vec::new();
    let mut recent: VecDeque<(Vec<Sample>, Vec<EventRecord>)> = VecDeque::new();
    let mut settled = 0usize;
    let mut status = SimStatus::MaxCyclesReached;
    let min_cycles = opts.settle_cycles.max(opts.average_cycles) + 1;

    for cycle in 0..opts.max_cycles {
        let t0 = cycle as f64 * period;
        it.t = t0;
        let start = it.y;
        let stored0 = it.model.stored(&it.y);
        it.samples.clear();
        it.events.clear();
        it.record_sample();
        it.run_to(t0 + period, true);

        let y = it.y;
        let d = |i: usize| y[i] - start[i];
        let v_f = fundamental(d(S_VS), d(S_VC), omega);
        let ix_f = fundamental(d(S_XS), d(S_XC), omega);
        let i_f = ix_f - v_f * it.model.gp;
        let mean = d(S_X1) / period;
        let rms_sq = d(S_X2) / period;
        let fund_sq = 0.5 * ix_f.norm_sqr();
        let thd = if fund_sq > 0.0 { ((rms_sq - fund_sq - mean * mean).max(0.0) / fund_sq).sqrt() } else { 0.0 };
        let entry = CycleLedger {
            input: d(W_IN),
            mechanical: d(E_MECH),
            dielectric: d(E_RP),
            flip: d(E_FLIP),
            harvested: d(E_HARV),
            diode: d(E_DIODE),
            stored_change: it.model.stored(&y) - stored0,
            v_fundamental: v_f,
            i_fundamental: i_f,
            thd,
        };
        if i_f.norm() > 0.0 && ix_f.norm() > 0.0 {
            it.lead = wrap_angle((i_f / ix_f).arg() + PI) - PI;
        }
        if let Some(prev) = ledger.last() {
            let rel = |a: f64, b: f64| {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 { 0.0 } else { (a - b).abs() / scale }
            };
            let dh = (entry.harvested - prev.harvested).abs() / harvest_scale(entry.input, entry.harvested);
            if rel(entry.input, prev.input) < opts.tolerance && dh < opts.tolerance {
                settled += 1;
            } else {
                settled = 0;
            }
        }
        ledger.push(entry);
        recent.push_back((core::mem::take(&mut it.samples), core::mem::take(&mut it.events)));
        while recent.len() > opts.record_cycles.max(1) {
            recent.pop_front();
        }
        // Slow or beating transients can pass the cycle-to-cycle test, so
        // two consecutive blocks of cycles must also agree on average.
        let blocks_agree = || {
            let n = opts.settle_cycles.max(1);
            if ledger.len() < 2 * n {
                return false;
            }
            let block = |r: core::ops::Range<usize>, f: fn(&CycleLedger) -> f64| ledger[r].iter().map(f).sum::<f64>();
            let len = ledger.len();
            let (new, old) = (len - n..len, len - 2 * n..len - n);
            let (in_new, h_new) = (block(new.clone(), |c| c.input), block(new, |c| c.harvested));
            let d_in = (in_new - block(old.clone(), |c| c.input)).abs();
            let d_h = (h_new - block(old, |c| c.harvested)).abs();
            d_in / in_new.abs().max(f64::MIN_POSITIVE) < opts.tolerance && d_h / harvest_scale(in_new, h_new) < opts.tolerance
        };
        if settled >= opts.settle_cycles && ledger.len() >= min_cycles && blocks_agree() {
            status = SimStatus::Converged;
            break;
        }
    }

    let mut samples = Vec::new();
    let mut events = Vec::new();
    for (s, e) in recent {
        samples.extend(s);
        events.extend(e);
    }
    Ok(SimTrace { omega, status, cycles: ledger.len(), samples, events, ledger, average_cycles: opts.average_cycles })
}

/// Cycle-averaged powers of a settled trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SteadyStatePower {
    pub p_in: f64,
    pub p_h: f64,
    pub p_d_flip: f64,
    pub p_rp: f64,
    pub p_mech: f64,
    pub p_diode: f64,
    /// Distortion of `αẋ`.
    pub thd_ih: f64,
    /// `|input − Σ sinks| / input` over the averaged cycles.
    pub ledger_residual: f64,
}

fn require_converged(trace: &SimTrace) -> Result<()> {
    if trace.status != SimStatus::Converged || trace.ledger.is_empty() {
        return Err(Error::NotConverged { cycles: trace.cycles });
    }
    Ok(())
}

pub fn steady_state_power(trace: &SimTrace) -> Result<SteadyStatePower> {
    require_converged(trace)?;
    let tail = trace.tail();
    let span = tail.len() as f64 * trace.period();
    let sum = |f: fn(&CycleLedger) -> f64| tail.iter().map(f).sum::<f64>();
    let input = sum(|c| c.input);
    let sinks = sum(|c| c.sinks());
    Ok(SteadyStatePower {
        p_in: input / span,
        p_h: sum(|c| c.harvested) / span,
        p_d_flip: sum(|c| c.flip) / span,
        p_rp: sum(|c| c.dielectric) / span,
        p_mech: sum(|c| c.mechanical) / span,
        p_diode: sum(|c| c.diode) / span,
        thd_ih: sum(|c| c.thd) / tail.len() as f64,
        ledger_residual: if input != 0.0 { ((input - sinks) / input).abs() } else { 0.0 },
    })
}

/// Electrical impedance seen by the current into `Cp` and the interface:
/// fundamental of `v_p` over fundamental of `αẋ − v_p/Rp`.
pub fn oracle_impedance(trace: &SimTrace) -> Result<Complex64> {
    require_converged(trace)?;
    let tail = trace.tail();
    let v: Complex64 = tail.iter().map(|c| c.v_fundamental).sum();
    let i: Complex64 = tail.iter().map(|c| c.i_fundamental).sum();
    if i.norm() == 0.0 {
        return Err(Error::DegenerateCurve("zero current fundamental"));
    }
    Ok(v / i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Excitation;

    fn weak_like() -> PehSystem {
        PehSystem::new(4.268e-3, 507.0, 0.0473, 4.4e-4, 45.8e-9)
            .unwrap()
            .with_excitation(Excitation::Force(0.02))
            .unwrap()
    }

    #[test]
    fn open_circuit_is_a_capacitor() {
        let s = weak_like();
        let w = s.natural_frequency();
        let tr = simulate(&s, &Circuit::open(), w, &SimOptions { steps_per_cycle: 512, ..Default::default() }).unwrap();
        assert_eq!(tr.status, SimStatus::Converged);
        let p = steady_state_power(&tr).unwrap();
        assert_eq!(p.p_h, 0.0);
        let z = oracle_impedance(&tr).unwrap() * (w * s.cp());
        assert!((z - Complex64::new(0.0, -1.0)).norm() < 5e-3, "{z}");
    }

    #[test]
    fn non_converged_trace_is_rejected() {
        let s = weak_like();
        let opts = SimOptions { max_cycles: 3, steps_per_cycle: 64, ..Default::default() };
        let tr = simulate(&s, &Circuit::open(), 100.0, &opts).unwrap();
        assert_eq!(tr.status, SimStatus::MaxCyclesReached);
        assert!(matches!(steady_state_power(&tr), Err(Error::NotConverged { .. })));
    }
}
