//! Impedance-domain models of piezoelectric energy harvesters (PEH) driven
//! through synchronized-switch interface circuits.
//!
//! The crate is split along the harvesting chain:
//!
//! * [`system`] holds the lumped electromechanical description and the
//!   mechanical/electrical domain conversions.
//! * [`ideal`] covers the ideal kinetic harvester: power ratios, half-power
//!   bandwidth and conjugate matching.
//! * [`waveform`] synthesizes the steady-state piezoelectric voltage of the
//!   SEH, SECE, S-SSHI and P-SSHI interfaces (optionally phase-variable) and
//!   the associated work cycles.
//! * [`fourier`] and [`impedance`] turn those waveforms into equivalent
//!   impedances and attainable impedance regions.
//! * [`power`] evaluates harvested power through the mechanical network,
//!   optimizes tuning per frequency and measures bandwidth.
//! * [`oracle`] is an independent time-domain simulation of the switched
//!   coupled ODE used to cross-check every frequency-domain result.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod fourier;
pub mod ideal;
pub mod impedance;
pub mod optimize;
pub mod oracle;
pub mod power;
pub mod system;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use ideal::IdealParams;
pub use impedance::{AttainableRegion, EquivalentImpedance, MatchReport, RegionGrid, RegionKind};
pub use oracle::{SimOptions, SimStatus, SimTrace, SteadyStatePower, SyncSource};
pub use power::{BandwidthReport, OperatingPoint, PowerMap, PowerPoint, TuningGrid};
pub use system::{DomainImpedance, ElectricalAnalog, Excitation, ImpedanceDomain, PehSystem};
pub use waveform::{InteriorVoltages, PiecewiseVoltage, Segment, Topology, TuningPoint, WorkCycle};
