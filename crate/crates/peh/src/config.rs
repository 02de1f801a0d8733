//! Run configuration: a versioned JSON document with unit-suffixed keys.
//!
//! Unknown keys are rejected everywhere. Validation errors name the offending
//! field by its dotted path.

use std::path::Path;

use peh_core::oracle::Storage;
use peh_core::optimize::SearchOptions;
use peh_core::{ElectricalAnalog, Excitation, PehSystem, SimOptions, SyncSource, Topology};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub system: SystemSource,
    #[serde(default = "default_topology")]
    pub topology: String,
    #[serde(default)]
    pub pv_enabled: bool,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_topology() -> String {
    "s-sshi".into()
}

/// Either a named preset with optional overrides or a full parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<SystemParameters>,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
}

/// Table-style harvester parameters in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParameters {
    pub r_ohm: f64,
    pub l_h: f64,
    pub c_f: f64,
    pub cp_f: f64,
    pub rp_ohm: Resistance,
    pub gamma: f64,
    pub alpha_n_per_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub li_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cr_f: Option<f64>,
    pub nominal_freq_hz: f64,
    pub base_accel_m_per_s2: f64,
}

/// A resistance in ohms, or the string `"inf"` for an open branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resistance {
    Ohms(f64),
    Open(OpenKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpenKeyword {
    #[serde(rename = "inf")]
    Inf,
}

impl Resistance {
    pub fn ohms(self) -> f64 {
        match self {
            Resistance::Ohms(r) => r,
            Resistance::Open(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rp_ohm: Option<Resistance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_accel_m_per_s2: Option<f64>,
}

impl Overrides {
    fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub omega: OmegaGrid,
    pub phi: PhiGrid,
    pub second: SecondGrid,
    pub region: RegionGridConfig,
    pub ideal: IdealGrid,
    pub compare: CompareGrid,
}

/// Excitation frequencies relative to the short-circuit natural frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OmegaGrid {
    pub lo_rel: f64,
    pub hi_rel: f64,
    pub points: usize,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        Self { lo_rel: 0.9, hi_rel: 1.1, points: 401 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiGrid {
    pub lo_deg: f64,
    pub hi_deg: f64,
    pub points: usize,
}

impl Default for PhiGrid {
    fn default() -> Self {
        Self { lo_deg: -90.0, hi_deg: 90.0, points: 13 }
    }
}

/// Second tuning parameter as a fraction of its valid range at each phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecondGrid {
    pub points: usize,
}

impl Default for SecondGrid {
    fn default() -> Self {
        Self { points: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionGridConfig {
    pub phi_points: usize,
    pub second_points: usize,
    pub omega_rel: f64,
}

impl Default for RegionGridConfig {
    fn default() -> Self {
        Self { phi_points: 181, second_points: 201, omega_rel: 1.0 }
    }
}

/// Dimensionless ideal-harvester parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdealGrid {
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl Default for IdealGrid {
    fn default() -> Self {
        Self { eta: vec![0.0, 0.25, 0.5, 1.0, 2.0, 5.0], zeta: vec![0.01, 0.02, 0.05] }
    }
}

/// Analytic-versus-oracle grid. Phase-capable circuits sweep the phase at a
/// fixed second-parameter fraction; SEH sweeps its rectified voltage instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareGrid {
    pub lo_rel: f64,
    pub hi_rel: f64,
    pub omega_points: usize,
    pub phi_lo_deg: f64,
    pub phi_hi_deg: f64,
    pub tuning_points: usize,
    pub second_fraction: f64,
    pub seh_vr_lo: f64,
    pub seh_vr_hi: f64,
}

impl Default for CompareGrid {
    fn default() -> Self {
        Self {
            lo_rel: 0.9,
            hi_rel: 1.1,
            omega_points: 21,
            phi_lo_deg: -60.0,
            phi_hi_deg: 60.0,
            tuning_points: 13,
            second_fraction: 0.5,
            seh_vr_lo: 0.05,
            seh_vr_hi: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub coarse_points: usize,
    pub rounds: usize,
    pub shrink: f64,
    pub line_points: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = SearchOptions::default();
        Self { coarse_points: d.coarse_points, rounds: d.rounds, shrink: d.shrink, line_points: d.line_points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncName {
    Velocity,
    CurrentFundamental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub steps_per_cycle: usize,
    pub max_cycles: usize,
    pub tolerance: f64,
    pub settle_cycles: usize,
    pub average_cycles: usize,
    pub record_cycles: usize,
    pub sync: SyncName,
    pub diode_drop_v: f64,
    /// Load across a finite storage capacitor; absent keeps `V_r` constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage_load_ohm: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let d = SimOptions::default();
        Self {
            steps_per_cycle: d.steps_per_cycle,
            max_cycles: d.max_cycles,
            tolerance: d.tolerance,
            settle_cycles: d.settle_cycles,
            average_cycles: d.average_cycles,
            record_cycles: d.record_cycles,
            sync: SyncName::CurrentFundamental,
            diode_drop_v: d.diode_drop,
            storage_load_ohm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

pub fn parse_topology(name: &str) -> Option<Topology> {
    Topology::ALL.into_iter().find(|t| t.name() == name)
}

impl RunConfig {
    /// Default configuration around a named preset.
    pub fn for_preset(name: &str) -> Result<Self, CliError> {
        presets::lookup(name).ok_or_else(|| invalid("system.preset", format!("unknown preset `{name}`")))?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            system: SystemSource { preset: Some(name.into()), parameters: None, overrides: Overrides::default() },
            topology: default_topology(),
            pv_enabled: true,
            grids: Grids::default(),
            optimizer: OptimizerConfig::default(),
            oracle: OracleConfig::default(),
            output: OutputConfig::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn topology(&self) -> Result<Topology, CliError> {
        parse_topology(&self.topology)
            .ok_or_else(|| invalid("topology", format!("`{}` is not one of seh, sece, s-sshi, p-sshi", self.topology)))
    }

    /// Resolved parameter block with overrides applied.
    pub fn parameters(&self) -> Result<SystemParameters, CliError> {
        let mut p = match (&self.system.preset, &self.system.parameters) {
            (Some(name), None) => presets::lookup(name)
                .ok_or_else(|| invalid("system.preset", format!("unknown preset `{name}`")))?
                .parameters,
            (None, Some(p)) => p.clone(),
            _ => return Err(invalid("system", "exactly one of `preset` or `parameters` is required")),
        };
        let o = &self.system.overrides;
        if let Some(rp) = o.rp_ohm {
            p.rp_ohm = rp;
        }
        if let Some(g) = o.gamma {
            p.gamma = g;
        }
        if let Some(a) = o.base_accel_m_per_s2 {
            p.base_accel_m_per_s2 = a;
        }
        Ok(p)
    }

    pub fn system(&self) -> Result<PehSystem, CliError> {
        build_system(&self.parameters()?)
    }

    pub fn search_options(&self) -> SearchOptions {
        let o = &self.optimizer;
        SearchOptions { coarse_points: o.coarse_points, rounds: o.rounds, shrink: o.shrink, line_points: o.line_points }
    }

    pub fn sim_options(&self) -> Result<SimOptions, CliError> {
        let o = &self.oracle;
        let storage = match o.storage_load_ohm {
            None => None,
            Some(load) => {
                let cr = self.parameters()?.cr_f.ok_or_else(|| {
                    invalid("oracle.storage_load_ohm", "needs `cr_f` in the system parameters")
                })?;
                Some(Storage { capacitance: cr, load })
            }
        };
        Ok(SimOptions {
            steps_per_cycle: o.steps_per_cycle,
            max_cycles: o.max_cycles,
            tolerance: o.tolerance,
            settle_cycles: o.settle_cycles,
            average_cycles: o.average_cycles,
            record_cycles: o.record_cycles,
            sync: match o.sync {
                SyncName::Velocity => SyncSource::Velocity,
                SyncName::CurrentFundamental => SyncSource::CurrentFundamental,
            },
            event_tolerance: SimOptions::default().event_tolerance,
            diode_drop: o.diode_drop_v,
            storage,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        self.topology()?;
        self.system()?;
        let g = &self.grids;
        check_span("grids.omega", g.omega.lo_rel, g.omega.hi_rel, g.omega.points)?;
        if !(g.phi.lo_deg >= -90.0 && g.phi.hi_deg <= 90.0) {
            return Err(invalid("grids.phi", "angles must lie in [-90, 90] degrees"));
        }
        check_ordered("grids.phi", g.phi.lo_deg, g.phi.hi_deg, g.phi.points)?;
        if g.second.points == 0 {
            return Err(invalid("grids.second.points", "must be >= 1"));
        }
        if g.region.phi_points < 16 || g.region.second_points < 16 {
            return Err(invalid("grids.region", "needs at least 16 points per axis"));
        }
        check_positive("grids.region.omega_rel", g.region.omega_rel)?;
        if g.ideal.eta.is_empty() || g.ideal.zeta.is_empty() {
            return Err(invalid("grids.ideal", "eta and zeta lists must be non-empty"));
        }
        if let Some(x) = g.ideal.eta.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(invalid("grids.ideal.eta", format!("{x} must be finite and >= 0")));
        }
        if let Some(x) = g.ideal.zeta.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(invalid("grids.ideal.zeta", format!("{x} must be finite and > 0")));
        }
        let c = &g.compare;
        check_span("grids.compare", c.lo_rel, c.hi_rel, c.omega_points)?;
        check_ordered("grids.compare.phi", c.phi_lo_deg, c.phi_hi_deg, c.tuning_points)?;
        if !(c.phi_lo_deg >= -90.0 && c.phi_hi_deg <= 90.0) {
            return Err(invalid("grids.compare", "phase limits must lie in [-90, 90] degrees"));
        }
        if !(0.0..=1.0).contains(&c.second_fraction) {
            return Err(invalid("grids.compare.second_fraction", "must lie in [0, 1]"));
        }
        if !(c.seh_vr_lo >= 0.0 && c.seh_vr_lo <= c.seh_vr_hi && c.seh_vr_hi.is_finite()) {
            return Err(invalid("grids.compare.seh_vr_lo", "need 0 <= seh_vr_lo <= seh_vr_hi"));
        }
        let o = &self.optimizer;
        if o.coarse_points < 2 || o.line_points == 0 || !(o.shrink > 0.0 && o.shrink < 1.0) {
            return Err(invalid("optimizer", "need coarse_points >= 2, line_points >= 1 and shrink in (0, 1)"));
        }
        let s = &self.oracle;
        if s.steps_per_cycle < 16 || s.max_cycles == 0 || s.average_cycles == 0 {
            return Err(invalid("oracle", "need steps_per_cycle >= 16, max_cycles >= 1 and average_cycles >= 1"));
        }
        check_positive("oracle.tolerance", s.tolerance)?;
        if !(s.diode_drop_v >= 0.0 && s.diode_drop_v.is_finite()) {
            return Err(invalid("oracle.diode_drop_v", "must be finite and >= 0"));
        }
        if let Some(load) = s.storage_load_ohm {
            check_positive("oracle.storage_load_ohm", load)?;
        }
        self.sim_options()?;
        if self.output.dir.is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(())
    }
}

fn check_positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be finite and > 0")))
    }
}

fn check_ordered(field: &str, lo: f64, hi: f64, points: usize) -> Result<(), CliError> {
    if points == 0 || !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(invalid(field, "need finite lo <= hi and at least one point"));
    }
    Ok(())
}

fn check_span(field: &str, lo: f64, hi: f64, points: usize) -> Result<(), CliError> {
    check_positive(&format!("{field}.lo_rel"), lo)?;
    if points < 2 || !(hi > lo && hi.is_finite()) {
        return Err(invalid(field, "need 0 < lo_rel < hi_rel and at least 2 points"));
    }
    Ok(())
}

/// Builds the model system. Every parameter error is a configuration error.
pub fn build_system(p: &SystemParameters) -> Result<PehSystem, CliError> {
    fn field(name: &'static str) -> impl Fn(peh_core::Error) -> CliError {
        move |e| invalid(&format!("system.{name}"), e)
    }
    check_positive("system.nominal_freq_hz", p.nominal_freq_hz)?;
    let mut sys = PehSystem::from_electrical(ElectricalAnalog { r: p.r_ohm, l: p.l_h, c: p.c_f }, p.alpha_n_per_v, p.cp_f)
        .map_err(field("parameters"))?
        .with_leakage(p.rp_ohm.ohms())
        .map_err(field("rp_ohm"))?
        .with_flip_factor(p.gamma)
        .map_err(field("gamma"))?
        .with_excitation(Excitation::BaseAcceleration(p.base_accel_m_per_s2))
        .map_err(field("base_accel_m_per_s2"))?;
    if let Some(li) = p.li_h {
        sys = sys.with_flip_inductance(li).map_err(field("li_h"))?;
    }
    if let Some(cr) = p.cr_f {
        sys = sys.with_storage_capacitance(cr).map_err(field("cr_f"))?;
    }
    Ok(sys)
}
