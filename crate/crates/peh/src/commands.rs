//! Subcommand implementations. Each `compute_*` function is pure and returns
//! plain data; the matching `write_*` function turns it into artifacts.

use std::f64::consts::{PI, TAU};

use peh_core::ideal::{beta_r, half_power_roots, power_limits};
use peh_core::impedance::{attainable_region, match_report, MatchOptions};
use peh_core::oracle::{oracle_impedance, simulate, steady_state_power, Circuit};
use peh_core::power::{bandwidth_metrics, evaluate_point, local_maxima, operating_point, optimal_at_frequency};
use peh_core::waveform::{synthesize_vp, work_cycle};
use peh_core::{Complex64, PehSystem, RegionGrid, RegionKind, SimStatus, SteadyStatePower, Topology, TuningGrid, TuningPoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{fmt, round9, round9_opt, ArtifactSink};

/// A single operating point requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSpec {
    /// Frequency relative to the natural frequency.
    pub omega_rel: f64,
    pub phi_deg: f64,
    /// Native second parameter: normalized `V_r` for SEH and S-SSHI, blocking
    /// angle in degrees for P-SSHI. `None` takes the middle of the valid range.
    pub second: Option<f64>,
}

impl Default for PointSpec {
    fn default() -> Self {
        Self { omega_rel: 1.0, phi_deg: 0.0, second: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Ideal,
    Waveform(PointSpec),
    Region,
    Sweep,
    Bandwidth,
    Oracle(PointSpec),
    Compare,
}

fn hz(omega: f64) -> f64 {
    omega / TAU
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Natural second-parameter value reported in artifacts.
pub fn second_param(t: &TuningPoint) -> f64 {
    match *t {
        TuningPoint::Seh { vr } | TuningPoint::SeriesSshi { vr, .. } => vr,
        TuningPoint::ParallelSshi { theta, .. } => theta.to_degrees(),
        TuningPoint::Sece { .. } => 0.0,
    }
}

pub fn tuning_for(topology: Topology, point: &PointSpec) -> Result<TuningPoint, CliError> {
    let phi = point.phi_deg.to_radians();
    let bad = |e: peh_core::Error| CliError::Config(format!("operating point: {e}"));
    if !topology.supports_phase() && point.phi_deg != 0.0 {
        return Err(CliError::Config(format!("operating point: {} has no switching phase", topology.name())));
    }
    let t = match (topology, point.second) {
        (_, None) => TuningPoint::from_fraction(topology, phi, 0.5),
        (Topology::Seh, Some(v)) => TuningPoint::seh(v),
        (Topology::Sece, Some(_)) => {
            return Err(CliError::Config("operating point: sece has no second parameter".into()));
        }
        (Topology::SeriesSshi, Some(v)) => TuningPoint::series_sshi(phi, v),
        (Topology::ParallelSshi, Some(v)) => TuningPoint::parallel_sshi(phi, v.to_radians()),
    };
    t.map_err(bad)
}

fn omega_axis(sys: &PehSystem, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let wn = sys.natural_frequency();
    linspace(lo, hi, n).into_iter().map(|r| r * wn).collect()
}

// ---------------------------------------------------------------- ideal

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealRow {
    pub eta: f64,
    pub zeta: f64,
    pub beta_r: f64,
    pub bandwidth_closed_form: f64,
    pub bandwidth_numeric: Option<f64>,
    pub lower_root: Option<f64>,
    pub upper_root: Option<f64>,
}

pub fn compute_ideal(cfg: &RunConfig) -> Result<Vec<IdealRow>, CliError> {
    let mut rows = Vec::new();
    for &eta in &cfg.grids.ideal.eta {
        for &zeta in &cfg.grids.ideal.zeta {
            let r = half_power_roots(eta, zeta)?;
            rows.push(IdealRow {
                eta,
                zeta,
                beta_r: beta_r(eta),
                bandwidth_closed_form: r.closed_form,
                bandwidth_numeric: r.numeric_span(),
                lower_root: r.lower_root,
                upper_root: r.upper_root,
            });
        }
    }
    Ok(rows)
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

#[derive(Serialize)]
struct IdealSummary {
    rows: usize,
    max_beta_r: f64,
    max_bandwidth_rel_error: Option<f64>,
}

fn write_ideal(rows: &[IdealRow], sink: &mut ArtifactSink) -> Result<(), CliError> {
    sink.csv(
        "ideal.csv",
        &["eta", "zeta", "beta_r", "bandwidth_closed_form", "bandwidth_numeric", "lower_root", "upper_root"],
        rows.iter().map(|r| {
            vec![
                fmt(r.eta),
                fmt(r.zeta),
                fmt(r.beta_r),
                fmt(r.bandwidth_closed_form),
                opt_cell(r.bandwidth_numeric),
                opt_cell(r.lower_root),
                opt_cell(r.upper_root),
            ]
        }),
    )?;
    let err = rows
        .iter()
        .filter_map(|r| r.bandwidth_numeric.map(|n| (n - r.bandwidth_closed_form).abs() / r.bandwidth_closed_form))
        .reduce(f64::max);
    sink.json(
        "ideal.json",
        &IdealSummary {
            rows: rows.len(),
            max_beta_r: round9(rows.iter().map(|r| r.beta_r).fold(0.0, f64::max)),
            max_bandwidth_rel_error: round9_opt(err),
        },
    )
}

// ------------------------------------------------------------- waveform

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub wt_rad: f64,
    pub before_norm: f64,
    pub after_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSummary {
    pub topology: String,
    pub omega_hz: f64,
    pub phi_deg: f64,
    pub second_param: f64,
    pub saturated: bool,
    pub voc_v: f64,
    pub rectified_voltage_v: Option<f64>,
    pub current_amplitude_a: f64,
    pub z_normalized_re: f64,
    pub z_normalized_im: f64,
    pub z_electrical_re_ohm: f64,
    pub z_electrical_im_ohm: f64,
    pub r_h_ohm: f64,
    pub r_d_ohm: f64,
    pub c_e_f: Option<f64>,
    pub work_cycle_area_j: f64,
    pub e_h_j: f64,
    pub e_d_j: f64,
    pub p_h_w: f64,
    pub jumps: Vec<JumpRecord>,
}

pub struct WaveformResult {
    pub summary: WaveformSummary,
    /// `(ωt, v_p/V_oc, v_p)` samples over one period.
    pub samples: Vec<(f64, f64, f64)>,
    /// `(v_p, q)` work-cycle vertices.
    pub cycle: Vec<(f64, f64)>,
}

const WAVEFORM_SAMPLES: usize = 1024;

pub fn compute_waveform(cfg: &RunConfig, point: &PointSpec) -> Result<WaveformResult, CliError> {
    let sys = cfg.system()?;
    let topo = cfg.topology()?;
    let t = tuning_for(topo, point)?;
    let omega = point.omega_rel * sys.natural_frequency();
    let op = operating_point(&sys, &t, omega)?;
    let wave = synthesize_vp(&t, sys.gamma(), op.voc)?;
    let wc = work_cycle(&wave, op.current_amplitude, omega);
    let start = wave.start();
    let samples = (0..=WAVEFORM_SAMPLES)
        .map(|k| {
            let wt = start + TAU * k as f64 / WAVEFORM_SAMPLES as f64;
            // The closing sample repeats the first instead of jumping ahead.
            let at = if k == WAVEFORM_SAMPLES { start } else { wt };
            (wt, wave.normalized(at), wave.eval(at))
        })
        .collect();
    let z = op.z_e;
    let summary = WaveformSummary {
        topology: topo.name().into(),
        omega_hz: round9(hz(omega)),
        phi_deg: round9(t.phi().to_degrees()),
        second_param: round9(second_param(&t)),
        saturated: wave.saturated,
        voc_v: round9(op.voc),
        rectified_voltage_v: round9_opt(op.rectified_voltage(sys.gamma())?),
        current_amplitude_a: round9(op.current_amplitude),
        z_normalized_re: round9(z.normalized.re),
        z_normalized_im: round9(z.normalized.im),
        z_electrical_re_ohm: round9(z.electrical().re),
        z_electrical_im_ohm: round9(z.electrical().im),
        r_h_ohm: round9(z.r_h),
        r_d_ohm: round9(z.r_d),
        c_e_f: round9_opt(Some(z.c_e)),
        work_cycle_area_j: round9(wc.area),
        e_h_j: round9(wc.e_h),
        e_d_j: round9(wc.e_d),
        p_h_w: round9(op.p_h),
        jumps: wave
            .jumps(1e-12)
            .into_iter()
            .map(|j| JumpRecord { wt_rad: round9(j.at), before_norm: round9(j.before), after_norm: round9(j.after) })
            .collect(),
    };
    Ok(WaveformResult { summary, samples, cycle: wc.trajectory })
}

fn write_waveform(r: &WaveformResult, sink: &mut ArtifactSink) -> Result<(), CliError> {
    let topo = &r.summary.topology;
    sink.csv(
        &format!("waveform_{topo}.csv"),
        &["wt_rad", "vp_over_voc", "vp_v"],
        r.samples.iter().map(|&(wt, n, v)| vec![fmt(wt), fmt(n), fmt(v)]),
    )?;
    sink.csv(
        &format!("workcycle_{topo}.csv"),
        &["vp_v", "q_c"],
        r.cycle.iter().map(|&(v, q)| vec![fmt(v), fmt(q)]),
    )?;
    sink.json(&format!("waveform_{topo}.json"), &r.summary)
}

// --------------------------------------------------------------- region

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleRecord {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub phi_deg: f64,
    pub second_param: f64,
    pub re_norm: f64,
    pub im_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub topology: String,
    pub pv_enabled: bool,
    pub kind: String,
    pub omega_hz: f64,
    pub impedance_scale_ns_per_m: f64,
    pub samples: usize,
    pub closed_form: Option<CircleRecord>,
    pub extreme_row: RegionRow,
    pub extreme_circle_distance: Option<f64>,
    pub match_target_re_norm: f64,
    pub match_target_im_norm: f64,
    pub match_relative_distance: f64,
    pub match_feasible: bool,
    pub match_phi_deg: f64,
    pub match_second_param: f64,
    pub seh_intersections: Option<usize>,
}

pub struct RegionResult {
    pub summary: RegionSummary,
    pub rows: Vec<RegionRow>,
    /// Full-precision normalized impedances in row order.
    pub values: Vec<Complex64>,
}

pub fn compute_region(cfg: &RunConfig) -> Result<RegionResult, CliError> {
    let sys = cfg.system()?;
    let topo = cfg.topology()?;
    let g = &cfg.grids.region;
    let omega = g.omega_rel * sys.natural_frequency();
    let region = attainable_region(&sys, topo, omega, cfg.pv_enabled, RegionGrid { phi_points: g.phi_points, second_points: g.second_points })?;
    let row = |s: &peh_core::impedance::RegionSample| RegionRow {
        phi_deg: s.tuning.phi().to_degrees(),
        second_param: second_param(&s.tuning),
        re_norm: s.z.re,
        im_norm: s.z.im,
    };
    let rows: Vec<RegionRow> = region.samples.iter().map(row).collect();
    let values: Vec<Complex64> = region.samples.iter().map(|s| s.z).collect();
    let (i_max, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    let extreme = &region.samples[i_max];
    let m = match_report(&sys, topo, omega, cfg.pv_enabled, &MatchOptions { search: cfg.search_options(), ..MatchOptions::default() })?;
    let rounded = |r: &RegionRow| RegionRow {
        phi_deg: round9(r.phi_deg),
        second_param: round9(r.second_param),
        re_norm: round9(r.re_norm),
        im_norm: round9(r.im_norm),
    };
    let summary = RegionSummary {
        topology: topo.name().into(),
        pv_enabled: cfg.pv_enabled,
        kind: match region.kind {
            RegionKind::Point => "point",
            RegionKind::Curve1d => "curve",
            RegionKind::Disk2d => "disk",
        }
        .into(),
        omega_hz: round9(hz(omega)),
        impedance_scale_ns_per_m: round9(sys.impedance_scale(omega)),
        samples: rows.len(),
        closed_form: region.closed_form.map(|c| CircleRecord {
            center_re: round9(c.center.re),
            center_im: round9(c.center.im),
            radius: round9(c.radius),
        }),
        extreme_row: rounded(&rows[i_max]),
        extreme_circle_distance: region.closed_form.map(|c| round9(c.signed_distance(extreme.z))),
        match_target_re_norm: round9(m.target_normalized.re),
        match_target_im_norm: round9(m.target_normalized.im),
        match_relative_distance: round9(m.relative_distance),
        match_feasible: m.feasible,
        match_phi_deg: round9(m.closest_tuning.phi().to_degrees()),
        match_second_param: round9(second_param(&m.closest_tuning)),
        seh_intersections: m.seh_intersections,
    };
    Ok(RegionResult { summary, rows, values })
}

fn write_region(r: &RegionResult, sys: &PehSystem, omega: f64, sink: &mut ArtifactSink) -> Result<(), CliError> {
    let topo = &r.summary.topology;
    let scale = sys.impedance_scale(omega);
    sink.csv(
        &format!("region_{topo}.csv"),
        &["phi_deg", "second_param", "re_norm", "im_norm", "re_mech_ns_per_m", "im_mech_ns_per_m"],
        r.rows.iter().map(|row| {
            vec![
                fmt(row.phi_deg),
                fmt(row.second_param),
                fmt(row.re_norm),
                fmt(row.im_norm),
                fmt(row.re_norm * scale),
                fmt(row.im_norm * scale),
            ]
        }),
    )?;
    sink.json(&format!("region_{topo}.json"), &r.summary)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub omega: f64,
    pub tuning: TuningPoint,
    pub p_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub topology: String,
    pub pv_enabled: bool,
    pub omega_points: usize,
    pub tuning_points: usize,
    pub peak_power_w: f64,
    pub peak_freq_hz: f64,
    pub peak_phi_deg: f64,
    pub peak_second_param: f64,
    pub power_limit_w: f64,
}

pub fn sweep_tunings(cfg: &RunConfig, topo: Topology) -> Result<Vec<TuningPoint>, CliError> {
    let g = &cfg.grids;
    let phi = if cfg.pv_enabled && topo.supports_phase() {
        linspace(g.phi.lo_deg.to_radians(), g.phi.hi_deg.to_radians(), g.phi.points)
    } else {
        vec![0.0]
    };
    let grid = TuningGrid { phi, fraction: linspace(0.0, 1.0, g.second.points) };
    Ok(grid.tunings(topo)?)
}

/// Frequency-major power map over the configured grid, evaluated in parallel.
pub fn compute_sweep(cfg: &RunConfig) -> Result<(SweepSummary, Vec<SweepRow>), CliError> {
    let sys = cfg.system()?;
    let topo = cfg.topology()?;
    let g = &cfg.grids.omega;
    let omegas = omega_axis(&sys, g.lo_rel, g.hi_rel, g.points);
    let tunings = sweep_tunings(cfg, topo)?;
    let per_omega: Vec<Vec<SweepRow>> = omegas
        .par_iter()
        .map(|&omega| {
            tunings
                .iter()
                .map(|t| Ok(SweepRow { omega, tuning: *t, p_h: evaluate_point(&sys, t, omega)?.p_h }))
                .collect::<Result<Vec<_>, peh_core::Error>>()
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<SweepRow> = per_omega.into_iter().flatten().collect();
    let best = rows.iter().fold(&rows[0], |b, r| if r.p_h > b.p_h { r } else { b });
    let summary = SweepSummary {
        topology: topo.name().into(),
        pv_enabled: cfg.pv_enabled,
        omega_points: omegas.len(),
        tuning_points: tunings.len(),
        peak_power_w: round9(best.p_h),
        peak_freq_hz: round9(hz(best.omega)),
        peak_phi_deg: round9(best.tuning.phi().to_degrees()),
        peak_second_param: round9(second_param(&best.tuning)),
        power_limit_w: round9(power_limits(&sys).1),
    };
    Ok((summary, rows))
}

fn write_sweep(summary: &SweepSummary, rows: &[SweepRow], sink: &mut ArtifactSink) -> Result<(), CliError> {
    let topo = &summary.topology;
    let pv = if summary.pv_enabled { "pv" } else { "fixed" };
    sink.csv(
        &format!("sweep_{topo}_{pv}.csv"),
        &["omega_hz", "phi_deg", "second_param", "p_h_mw"],
        rows.iter().map(|r| vec![fmt(hz(r.omega)), fmt(r.tuning.phi().to_degrees()), fmt(second_param(&r.tuning)), fmt(r.p_h * 1e3)]),
    )?;
    sink.json(&format!("sweep_{topo}_{pv}.json"), summary)
}

// ------------------------------------------------------------ bandwidth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSummary {
    pub topology: String,
    pub pv_enabled: bool,
    pub peak_power_w: f64,
    pub peak_freq_hz: f64,
    pub delta_omega_hm_hz: f64,
    pub delta_omega_sr_hz: f64,
    pub broadening_ratio: Option<f64>,
    pub oracle_discrepancy_pct: Option<f64>,
    pub oracle_status: String,
    pub truncated: bool,
    pub power_limit_w: f64,
    pub power_limit_at_peak_w: f64,
    pub seh_peak_power_w: f64,
    pub phase_zero_peak_power_w: Option<f64>,
    pub phase_zero_peak_freq_hz: Option<f64>,
    pub local_maxima_hz: Vec<f64>,
    pub phase_sign_change_hz: Vec<f64>,
}

/// One frequency of the optimized envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRow {
    pub omega: f64,
    pub tuning: TuningPoint,
    pub p_h: f64,
    pub p_phase_zero: Option<f64>,
    pub p_seh: f64,
}

/// Minimum prominence, relative to the global peak, of a reported local
/// maximum. Large enough to ignore optimizer ripple on PV envelopes.
pub const PEAK_PROMINENCE: f64 = 0.01;

pub fn compute_bandwidth(cfg: &RunConfig) -> Result<(BandwidthSummary, Vec<BandwidthRow>), CliError> {
    let sys = cfg.system()?;
    let topo = cfg.topology()?;
    let g = &cfg.grids.omega;
    let omegas = omega_axis(&sys, g.lo_rel, g.hi_rel, g.points);
    let opts = cfg.search_options();
    let pv = cfg.pv_enabled && topo.supports_phase();
    let rows: Vec<BandwidthRow> = omegas
        .par_iter()
        .map(|&omega| {
            let (tuning, p_h) = optimal_at_frequency(&sys, topo, pv, omega, &opts)?;
            let p_phase_zero = if pv { Some(optimal_at_frequency(&sys, topo, false, omega, &opts)?.1) } else { None };
            let p_seh = if topo == Topology::Seh { p_h } else { optimal_at_frequency(&sys, Topology::Seh, false, omega, &opts)?.1 };
            Ok(BandwidthRow { omega, tuning, p_h, p_phase_zero, p_seh })
        })
        .collect::<Result<_, peh_core::Error>>()?;

    let curve: Vec<f64> = rows.iter().map(|r| r.p_h).collect();
    let seh: Vec<f64> = rows.iter().map(|r| r.p_seh).collect();
    let zero: Option<Vec<f64>> = if pv { Some(rows.iter().map(|r| r.p_phase_zero.unwrap_or(0.0)).collect()) } else { None };
    let report = bandwidth_metrics(&omegas, &curve, &seh, zero.as_deref())?;
    let zero_peak = zero.as_ref().map(|z| {
        let i = (0..z.len()).fold(0, |b, i| if z[i] > z[b] { i } else { b });
        (z[i], omegas[i])
    });
    let phase_sign_change_hz = if pv {
        rows.windows(2)
            .filter(|w| w[0].tuning.phi().signum() != w[1].tuning.phi().signum() && w[0].tuning.phi() != 0.0 && w[1].tuning.phi() != 0.0)
            .map(|w| round9(hz(0.5 * (w[0].omega + w[1].omega))))
            .collect()
    } else {
        Vec::new()
    };

    let i_peak = (0..rows.len()).fold(0, |b, i| if curve[i] > curve[b] { i } else { b });
    let (oracle_discrepancy_pct, oracle_status) = match oracle_check(&sys, &rows[i_peak], cfg) {
        Ok((d, status)) => (d, status),
        Err(e) => (None, format!("error: {e}")),
    };

    let summary = BandwidthSummary {
        topology: topo.name().into(),
        pv_enabled: pv,
        peak_power_w: round9(report.peak_power),
        peak_freq_hz: round9(hz(report.peak_omega)),
        delta_omega_hm_hz: round9(hz(report.delta_omega_hm)),
        delta_omega_sr_hz: round9(hz(report.delta_omega_sr)),
        broadening_ratio: round9_opt(report.broadening_ratio),
        oracle_discrepancy_pct,
        oracle_status,
        truncated: report.truncated,
        power_limit_w: round9(power_limits(&sys).1),
        power_limit_at_peak_w: round9(peh_core::power::power_limit_with_leakage(&sys, report.peak_omega)?),
        seh_peak_power_w: round9(seh.iter().copied().fold(0.0, f64::max)),
        phase_zero_peak_power_w: zero_peak.map(|(p, _)| round9(p)),
        phase_zero_peak_freq_hz: zero_peak.map(|(_, w)| round9(hz(w))),
        local_maxima_hz: local_maxima(&curve, PEAK_PROMINENCE).into_iter().map(|i| round9(hz(omegas[i]))).collect(),
        phase_sign_change_hz,
    };
    Ok((summary, rows))
}

fn oracle_check(sys: &PehSystem, row: &BandwidthRow, cfg: &RunConfig) -> Result<(Option<f64>, String), CliError> {
    let opts = cfg.sim_options()?;
    let trace = simulate(sys, &Circuit::from_tuning(sys, &row.tuning, row.omega)?, row.omega, &opts)?;
    if trace.status != SimStatus::Converged {
        return Ok((None, "max_cycles_reached".into()));
    }
    let p = steady_state_power(&trace)?;
    Ok((Some(round9(100.0 * (p.p_h / row.p_h - 1.0))), "converged".into()))
}

fn write_bandwidth(summary: &BandwidthSummary, rows: &[BandwidthRow], sink: &mut ArtifactSink) -> Result<(), CliError> {
    let topo = &summary.topology;
    sink.csv(
        &format!("bandwidth_{topo}.csv"),
        &["omega_hz", "phi_deg", "second_param", "p_h_mw", "p_h_phase_zero_mw", "p_h_seh_mw"],
        rows.iter().map(|r| {
            vec![
                fmt(hz(r.omega)),
                fmt(r.tuning.phi().to_degrees()),
                fmt(second_param(&r.tuning)),
                fmt(r.p_h * 1e3),
                opt_cell(r.p_phase_zero.map(|p| p * 1e3)),
                fmt(r.p_seh * 1e3),
            ]
        }),
    )?;
    sink.json(&format!("bandwidth_{topo}.json"), summary)
}

// --------------------------------------------------------------- oracle

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub topology: String,
    pub status: String,
    pub cycles: usize,
    pub omega_hz: f64,
    pub phi_deg: f64,
    pub second_param: f64,
    pub rectified_voltage_v: f64,
    pub p_in_w: Option<f64>,
    pub p_h_w: Option<f64>,
    pub p_d_flip_w: Option<f64>,
    pub p_rp_w: Option<f64>,
    pub p_mech_w: Option<f64>,
    pub p_diode_w: Option<f64>,
    pub thd_ih: Option<f64>,
    pub ledger_residual: Option<f64>,
    pub p_h_analytic_w: f64,
    pub discrepancy_pct: Option<f64>,
    pub z_oracle_re_norm: Option<f64>,
    pub z_oracle_im_norm: Option<f64>,
    pub z_analytic_re_norm: f64,
    pub z_analytic_im_norm: f64,
    pub events: usize,
}

pub struct OracleResult {
    pub summary: OracleSummary,
    pub trace: peh_core::SimTrace,
}

pub fn compute_oracle(cfg: &RunConfig, point: &PointSpec) -> Result<OracleResult, CliError> {
    let sys = cfg.system()?;
    let topo = cfg.topology()?;
    let t = tuning_for(topo, point)?;
    let omega = point.omega_rel * sys.natural_frequency();
    let op = operating_point(&sys, &t, omega)?;
    let circuit = Circuit::from_tuning(&sys, &t, omega)?;
    let trace = simulate(&sys, &circuit, omega, &cfg.sim_options()?)?;
    let power: Option<SteadyStatePower> = steady_state_power(&trace).ok();
    let z = oracle_impedance(&trace).ok().map(|z| z * (omega * sys.cp()));
    let o = |f: fn(&SteadyStatePower) -> f64| power.as_ref().map(|p| round9(f(p)));
    let summary = OracleSummary {
        topology: topo.name().into(),
        status: status_name(trace.status).into(),
        cycles: trace.cycles,
        omega_hz: round9(hz(omega)),
        phi_deg: round9(t.phi().to_degrees()),
        second_param: round9(second_param(&t)),
        rectified_voltage_v: round9(circuit.vr),
        p_in_w: o(|p| p.p_in),
        p_h_w: o(|p| p.p_h),
        p_d_flip_w: o(|p| p.p_d_flip),
        p_rp_w: o(|p| p.p_rp),
        p_mech_w: o(|p| p.p_mech),
        p_diode_w: o(|p| p.p_diode),
        thd_ih: o(|p| p.thd_ih),
        ledger_residual: o(|p| p.ledger_residual),
        p_h_analytic_w: round9(op.p_h),
        discrepancy_pct: power.as_ref().filter(|_| op.p_h > 0.0).map(|p| round9(100.0 * (p.p_h / op.p_h - 1.0))),
        z_oracle_re_norm: z.map(|z| round9(z.re)),
        z_oracle_im_norm: z.map(|z| round9(z.im)),
        z_analytic_re_norm: round9(op.z_e.normalized.re),
        z_analytic_im_norm: round9(op.z_e.normalized.im),
        events: trace.events.len(),
    };
    Ok(OracleResult { summary, trace })
}

fn status_name(s: SimStatus) -> &'static str {
    match s {
        SimStatus::Converged => "converged",
        SimStatus::MaxCyclesReached => "max_cycles_reached",
    }
}

fn write_oracle(r: &OracleResult, sink: &mut ArtifactSink) -> Result<(), CliError> {
    let topo = &r.summary.topology;
    sink.csv(
        &format!("oracle_{topo}_trace.csv"),
        &["t", "x", "xdot", "vp", "vr"],
        r.trace.samples.iter().map(|s| vec![fmt(s.t), fmt(s.x), fmt(s.xdot), fmt(s.vp), fmt(s.vr)]),
    )?;
    sink.json(&format!("oracle_{topo}.json"), &r.summary)
}

// -------------------------------------------------------------- compare

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub omega: f64,
    pub tuning: TuningPoint,
    pub p_analytic: f64,
    pub p_oracle: Option<f64>,
    pub z_analytic: Complex64,
    pub z_oracle: Option<Complex64>,
    pub thd_ih: Option<f64>,
    pub ledger_residual: Option<f64>,
    pub status: SimStatus,
}

impl CompareRow {
    pub fn power_discrepancy(&self) -> Option<f64> {
        self.p_oracle.map(|p| p / self.p_analytic - 1.0)
    }

    pub fn z_magnitude_error(&self) -> Option<f64> {
        self.z_oracle.map(|z| z.norm() / self.z_analytic.norm() - 1.0)
    }

    /// Phase difference in radians, wrapped to `(-π, π]`.
    pub fn z_phase_error(&self) -> Option<f64> {
        self.z_oracle.map(|z| {
            let d = z.arg() - self.z_analytic.arg();
            (d + PI).rem_euclid(TAU) - PI
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub topology: String,
    pub runs: usize,
    pub converged: usize,
    pub worst_discrepancy_pct: Option<f64>,
    pub worst_z_mag_err_pct: Option<f64>,
    pub worst_z_phase_err_deg: Option<f64>,
    pub max_thd_ih: Option<f64>,
    pub max_ledger_residual: Option<f64>,
}

pub fn compare_tunings(cfg: &RunConfig, topo: Topology) -> Result<Vec<TuningPoint>, CliError> {
    let c = &cfg.grids.compare;
    let out = if topo.supports_phase() {
        let phis = if cfg.pv_enabled { linspace(c.phi_lo_deg, c.phi_hi_deg, c.tuning_points) } else { vec![0.0] };
        phis.into_iter()
            .map(|p| TuningPoint::from_fraction(topo, p.to_radians(), c.second_fraction))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        linspace(c.seh_vr_lo, c.seh_vr_hi, c.tuning_points).into_iter().map(TuningPoint::seh).collect::<Result<Vec<_>, _>>()?
    };
    Ok(out)
}

/// Runs the analytic model and the oracle side by side, one oracle run per
/// grid point, in parallel with ordered output.
pub fn compute_compare_for(cfg: &RunConfig, sys: &PehSystem, topo: Topology) -> Result<Vec<CompareRow>, CliError> {
    let c = &cfg.grids.compare;
    let omegas = omega_axis(sys, c.lo_rel, c.hi_rel, c.omega_points);
    let tunings = compare_tunings(cfg, topo)?;
    let opts = cfg.sim_options()?;
    let jobs: Vec<(f64, TuningPoint)> = omegas.iter().flat_map(|&w| tunings.iter().map(move |t| (w, *t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(omega, tuning)| {
            let op = operating_point(sys, &tuning, omega)?;
            let trace = simulate(sys, &Circuit::from_tuning(sys, &tuning, omega)?, omega, &opts)?;
            let power = steady_state_power(&trace).ok();
            Ok(CompareRow {
                omega,
                tuning,
                p_analytic: op.p_h,
                p_oracle: power.map(|p| p.p_h),
                z_analytic: op.z_e.electrical(),
                z_oracle: oracle_impedance(&trace).ok(),
                thd_ih: power.map(|p| p.thd_ih),
                ledger_residual: power.map(|p| p.ledger_residual),
                status: trace.status,
            })
        })
        .collect::<Result<Vec<_>, peh_core::Error>>()?;
    Ok(rows)
}

pub fn compute_compare(cfg: &RunConfig) -> Result<(CompareSummary, Vec<CompareRow>), CliError> {
    let sys = cfg.system()?;
    let topo = cfg.topology()?;
    let rows = compute_compare_for(cfg, &sys, topo)?;
    let worst = |f: &dyn Fn(&CompareRow) -> Option<f64>| rows.iter().filter_map(f).map(f64::abs).reduce(f64::max);
    let summary = CompareSummary {
        topology: topo.name().into(),
        runs: rows.len(),
        converged: rows.iter().filter(|r| r.status == SimStatus::Converged).count(),
        worst_discrepancy_pct: round9_opt(worst(&|r| r.power_discrepancy()).map(|x| 100.0 * x)),
        worst_z_mag_err_pct: round9_opt(worst(&|r| r.z_magnitude_error()).map(|x| 100.0 * x)),
        worst_z_phase_err_deg: round9_opt(worst(&|r| r.z_phase_error()).map(f64::to_degrees)),
        max_thd_ih: round9_opt(worst(&|r| r.thd_ih)),
        max_ledger_residual: round9_opt(worst(&|r| r.ledger_residual)),
    };
    Ok((summary, rows))
}

fn write_compare(summary: &CompareSummary, rows: &[CompareRow], sink: &mut ArtifactSink) -> Result<(), CliError> {
    let topo = &summary.topology;
    sink.csv(
        &format!("compare_{topo}.csv"),
        &[
            "omega_hz",
            "phi_deg",
            "second_param",
            "p_h_analytic_mw",
            "p_h_oracle_mw",
            "discrepancy_pct",
            "z_mag_err_pct",
            "z_phase_err_deg",
            "thd_ih",
            "status",
        ],
        rows.iter().map(|r| {
            vec![
                fmt(hz(r.omega)),
                fmt(r.tuning.phi().to_degrees()),
                fmt(second_param(&r.tuning)),
                fmt(r.p_analytic * 1e3),
                opt_cell(r.p_oracle.map(|p| p * 1e3)),
                opt_cell(r.power_discrepancy().map(|x| 100.0 * x)),
                opt_cell(r.z_magnitude_error().map(|x| 100.0 * x)),
                opt_cell(r.z_phase_error().map(f64::to_degrees)),
                opt_cell(r.thd_ih),
                status_name(r.status).into(),
            ]
        }),
    )?;
    sink.json(&format!("compare_{topo}.json"), summary)
}

// ------------------------------------------------------------- dispatch

/// Runs one subcommand and writes its artifacts into `sink`. Oracle
/// non-convergence is reported after the artifacts are written.
pub fn execute(cmd: &Command, cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<(), CliError> {
    match cmd {
        Command::Ideal => write_ideal(&compute_ideal(cfg)?, sink),
        Command::Waveform(point) => write_waveform(&compute_waveform(cfg, point)?, sink),
        Command::Region => {
            let r = compute_region(cfg)?;
            let sys = cfg.system()?;
            write_region(&r, &sys, cfg.grids.region.omega_rel * sys.natural_frequency(), sink)
        }
        Command::Sweep => {
            let (s, rows) = compute_sweep(cfg)?;
            write_sweep(&s, &rows, sink)
        }
        Command::Bandwidth => {
            let (s, rows) = compute_bandwidth(cfg)?;
            write_bandwidth(&s, &rows, sink)
        }
        Command::Oracle(point) => {
            let r = compute_oracle(cfg, point)?;
            write_oracle(&r, sink)?;
            if r.trace.status != SimStatus::Converged {
                return Err(CliError::NotConverged(format!("{} cycles without settling", r.trace.cycles)));
            }
            Ok(())
        }
        Command::Compare => {
            let (s, rows) = compute_compare(cfg)?;
            write_compare(&s, &rows, sink)?;
            if s.converged < s.runs {
                return Err(CliError::NotConverged(format!("{} of {} runs did not settle", s.runs - s.converged, s.runs)));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_both_ends() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        assert_eq!(linspace(4.0, 9.0, 1), vec![4.0]);
    }

    #[test]
    fn point_specs_map_to_native_parameters() {
        let p = |phi_deg, second| PointSpec { omega_rel: 1.0, phi_deg, second };
        let t = tuning_for(Topology::ParallelSshi, &p(-30.0, Some(45.0))).unwrap();
        assert!((second_param(&t) - 45.0).abs() < 1e-12 && (t.phi().to_degrees() + 30.0).abs() < 1e-12);
        assert_eq!(second_param(&tuning_for(Topology::Seh, &p(0.0, Some(0.4))).unwrap()), 0.4);
        assert_eq!(second_param(&tuning_for(Topology::Sece, &p(20.0, None)).unwrap()), 0.0);
        assert!(matches!(tuning_for(Topology::Seh, &p(10.0, None)), Err(CliError::Config(_))));
        assert!(matches!(tuning_for(Topology::Sece, &p(0.0, Some(0.1))), Err(CliError::Config(_))));
        assert!(matches!(tuning_for(Topology::SeriesSshi, &p(60.0, Some(0.9))), Err(CliError::Config(_))));
    }

    #[test]
    fn phase_error_wraps() {
        let row = CompareRow {
            omega: 1.0,
            tuning: TuningPoint::seh(0.5).unwrap(),
            p_analytic: 1.0,
            p_oracle: Some(1.02),
            z_analytic: Complex64::from_polar(1.0, PI - 0.01),
            z_oracle: Some(Complex64::from_polar(1.0, -PI + 0.01)),
            thd_ih: None,
            ledger_residual: None,
            status: SimStatus::Converged,
        };
        assert!((row.z_phase_error().unwrap() - 0.02).abs() < 1e-12);
        assert!((row.power_discrepancy().unwrap() - 0.02).abs() < 1e-12);
    }
}
