mod common;

use std::f64::consts::PI;

use peh_core::oracle::{oracle_impedance, simulate, steady_state_power, Circuit, EventKind};
use peh_core::power::operating_point;
use peh_core::{Complex64, PehSystem, SimOptions, SimStatus, SimTrace, Topology, TuningPoint};

fn run(s: &PehSystem, t: &TuningPoint, wr: f64, opts: &SimOptions) -> SimTrace {
    let w = s.natural_frequency() * wr;
    let tr = simulate(s, &Circuit::from_tuning(s, t, w).unwrap(), w, opts).unwrap();
    assert_eq!(tr.status, SimStatus::Converged, "{t:?} at {wr}");
    tr
}

fn normalized_z(s: &PehSystem, tr: &SimTrace) -> Complex64 {
    oracle_impedance(tr).unwrap() * (tr.omega * s.cp())
}

fn peak(values: impl Iterator<Item = f64>) -> f64 {
    values.map(f64::abs).fold(0.0, f64::max)
}

#[test]
fn decoupled_oscillator_matches_closed_form() {
    let s = PehSystem::new(4.2e-3, 507.0, 0.0473, 1e-12, 45.7e-9).unwrap();
    for wr in [0.9, 1.0, 1.07] {
        let w = s.natural_frequency() * wr;
        let tr = simulate(&s, &Circuit::open(), w, &SimOptions::default()).unwrap();
        assert_eq!(tr.status, SimStatus::Converged);
        let exact = s.excitation_force() / (s.mechanical_impedance(w).unwrap().value.norm() * w);
        let x = peak(tr.samples.iter().map(|p| p.x));
        assert!((x / exact - 1.0).abs() < 1e-3, "{wr}: {x} vs {exact}");
        let p = steady_state_power(&tr).unwrap();
        assert_eq!(p.p_h, 0.0);
        assert!(p.thd_ih < 1e-3);
    }
}

#[test]
fn open_circuit_voltage_follows_displacement() {
    let s = common::weak_with(f64::INFINITY);
    let w = s.natural_frequency();
    let tr = simulate(&s, &Circuit::open(), w, &SimOptions::default()).unwrap();
    let x = peak(tr.samples.iter().map(|p| p.x));
    let v = peak(tr.samples.iter().map(|p| p.vp));
    assert!((v / (s.alpha() * x / s.cp()) - 1.0).abs() < 1e-3);
    assert_eq!(steady_state_power(&tr).unwrap().p_h, 0.0);
    assert!((normalized_z(&s, &tr) - Complex64::new(0.0, -1.0)).norm() < 5e-3);
}

#[test]
fn sece_in_phase_impedance() {
    let s = common::weak();
    let tr = run(&s, &TuningPoint::sece(0.0).unwrap(), 1.0, &SimOptions::default());
    let z = normalized_z(&s, &tr);
    let expected = Complex64::new(4.0 / PI, -1.0);
    assert!((z - expected).norm() < 0.03 * expected.norm(), "{z}");
}

#[test]
fn s_sshi_short_circuit_impedance_without_leakage() {
    let s = common::weak_with(f64::INFINITY);
    let tr = run(&s, &TuningPoint::series_sshi(0.0, 0.0).unwrap(), 1.0, &SimOptions::default());
    let z = normalized_z(&s, &tr);
    let expected = Complex64::new(16.0 / PI, -1.0);
    assert!((z - expected).norm() < 0.03 * expected.norm(), "{z}");
}

#[test]
fn seh_peak_over_rectified_voltage_matches_harmonic_balance() {
    let s = common::weak();
    let opts = SimOptions::default();
    let (mut best_ana, mut best_ora) = (0.0f64, 0.0f64);
    for i in 1..20 {
        let t = TuningPoint::seh(0.05 * i as f64).unwrap();
        best_ana = best_ana.max(operating_point(&s, &t, s.natural_frequency()).unwrap().p_h);
        best_ora = best_ora.max(steady_state_power(&run(&s, &t, 1.0, &opts)).unwrap().p_h);
    }
    assert!((best_ora / best_ana - 1.0).abs() < 0.05, "{best_ora} vs {best_ana}");
}

#[test]
fn weak_coupling_barely_distorts_velocity_and_ledgers_close() {
    let s = common::weak();
    let opts = SimOptions::default();
    for t in [
        TuningPoint::seh(0.5).unwrap(),
        TuningPoint::sece(0.6).unwrap(),
        TuningPoint::series_sshi(-0.6, 0.4).unwrap(),
        TuningPoint::from_fraction(Topology::ParallelSshi, 0.4, 0.5).unwrap(),
    ] {
        for wr in [0.95, 1.0, 1.05] {
            let p = steady_state_power(&run(&s, &t, wr, &opts)).unwrap();
            assert!(p.thd_ih < 0.02, "{t:?}: thd {}", p.thd_ih);
            assert!(p.ledger_residual < 0.01, "{t:?}: residual {}", p.ledger_residual);
        }
    }
}

#[test]
fn halving_the_step_barely_moves_power() {
    let s = common::weak();
    let t = TuningPoint::series_sshi(0.5, 0.3).unwrap();
    let coarse = SimOptions { steps_per_cycle: 2048, tolerance: 1e-5, ..Default::default() };
    let fine = SimOptions { steps_per_cycle: 4096, ..coarse.clone() };
    let a = steady_state_power(&run(&s, &t, 1.02, &coarse)).unwrap().p_h;
    let b = steady_state_power(&run(&s, &t, 1.02, &fine)).unwrap().p_h;
    assert!((a / b - 1.0).abs() < 2e-3, "{a} vs {b}");
}

#[test]
fn flip_losses_are_nonnegative_and_consistent() {
    let s = common::strong();
    let opts = SimOptions::default();
    let cp = s.cp();
    for t in [
        TuningPoint::series_sshi(0.3, 0.2).unwrap(),
        TuningPoint::from_fraction(Topology::ParallelSshi, -0.3, 0.6).unwrap(),
    ] {
        let tr = run(&s, &t, 1.0, &opts);
        let vr = tr.samples[0].vr;
        let flips: Vec<_> = tr.events.iter().filter(|e| e.kind == EventKind::Flip).collect();
        assert!(!flips.is_empty());
        for e in flips {
            let released = 0.5 * cp * (e.v_before.powi(2) - e.v_after.powi(2));
            let delivered = match t.topology() {
                Topology::SeriesSshi => vr * cp * (e.v_before - e.v_after).abs(),
                _ => 0.0,
            };
            assert!(e.loss >= 0.0, "{e:?}");
            assert!((e.loss - (released - delivered)).abs() <= 1e-9 * released.abs().max(1e-30));
        }
    }
}

#[test]
fn strong_coupling_lag_switching_settles_near_harmonic_balance() {
    let s = common::strong();
    let opts = SimOptions::default();
    for (t, wr) in [
        (TuningPoint::sece(PI / 3.0).unwrap(), 1.06),
        (TuningPoint::series_sshi(0.0, 0.5).unwrap(), 1.09),
        (TuningPoint::series_sshi(0.7, 0.38).unwrap(), 1.07),
    ] {
        let tr = run(&s, &t, wr, &opts);
        let ana = operating_point(&s, &t, tr.omega).unwrap().p_h;
        let ora = steady_state_power(&tr).unwrap().p_h;
        assert!((ora / ana - 1.0).abs() < 0.15, "{t:?}: {ora} vs {ana}");
    }
}
