mod common;

use peh_core::ideal::power_limits;
use peh_core::optimize::SearchOptions;
use peh_core::power::{bandwidth_metrics, local_maxima, optimal_at_frequency, optimized_curve, power_at, sweep};
use peh_core::{Topology, TuningGrid, TuningPoint};

fn grid(lo: f64, hi: f64, n: usize, wn: f64) -> Vec<f64> {
    (0..n).map(|i| wn * (lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

#[test]
fn single_point_sweep_reproduces_power() {
    let s = common::strong();
    let w = s.natural_frequency();
    let g = TuningGrid { phi: vec![0.4], fraction: vec![0.3] };
    let map = sweep(&s, Topology::SeriesSshi, &[w], &g).unwrap();
    let t = TuningPoint::from_fraction(Topology::SeriesSshi, 0.4, 0.3).unwrap();
    assert_eq!(map.points.len(), 1);
    assert_eq!(map.at(0, 0).p_h, power_at(&s, &t, w).unwrap());
}

#[test]
fn weak_preset_stays_below_limit() {
    let s = common::weak();
    let (_, p_max) = power_limits(&s);
    let omegas = grid(0.95, 1.05, 41, s.natural_frequency());
    let g = TuningGrid::uniform(-1.5, 1.5, 13, 11);
    for topo in Topology::ALL {
        let best = sweep(&s, topo, &omegas, &g).unwrap().envelope().into_iter().fold(0.0, f64::max);
        assert!(best > 0.0 && best < p_max, "{topo:?}: {best} vs {p_max}");
    }
}

#[test]
fn strong_seh_reaches_the_lossless_limit_at_two_frequencies() {
    let s = common::strong_with(f64::INFINITY);
    let (_, p_max) = power_limits(&s);
    let omegas = grid(0.95, 1.15, 201, s.natural_frequency());
    let curve: Vec<f64> = optimized_curve(&s, Topology::Seh, false, &omegas, &SearchOptions::default())
        .unwrap()
        .into_iter()
        .map(|x| x.1)
        .collect();
    let peaks = local_maxima(&curve, 0.01);
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    for i in peaks {
        assert!(curve[i] > 0.99 * p_max && curve[i] <= p_max * (1.0 + 1e-9));
    }
}

#[test]
fn optimal_phase_changes_sign_at_zero_phase_peak() {
    let s = common::strong();
    let wn = s.natural_frequency();
    let opts = SearchOptions::default();
    let omegas = grid(0.9, 1.3, 81, wn);
    let zero: Vec<f64> = optimized_curve(&s, Topology::SeriesSshi, false, &omegas, &opts).unwrap().into_iter().map(|x| x.1).collect();
    let i_peak = (0..zero.len()).max_by(|&a, &b| zero[a].total_cmp(&zero[b])).unwrap();
    let w_peak = omegas[i_peak];
    let below = optimal_at_frequency(&s, Topology::SeriesSshi, true, 0.95 * w_peak, &opts).unwrap().0;
    let above = optimal_at_frequency(&s, Topology::SeriesSshi, true, 1.05 * w_peak, &opts).unwrap().0;
    assert!(below.phi() < 0.0, "{below:?}");
    assert!(above.phi() > 0.0, "{above:?}");
}

#[test]
fn bandwidth_of_lorentzian_and_self_reference() {
    let omegas: Vec<f64> = (0..20001).map(|i| 0.5 + i as f64 * 1e-4).collect();
    let w = 0.05;
    let p: Vec<f64> = omegas.iter().map(|&o| 1.0 / (1.0 + ((o - 1.5) / w).powi(2))).collect();
    let r = bandwidth_metrics(&omegas, &p, &p, Some(&p)).unwrap();
    assert!((r.delta_omega_hm - 2.0 * w).abs() < 1e-6);
    assert_eq!(r.delta_omega_hm, r.delta_omega_sr);
    assert_eq!(r.broadening_ratio, Some(1.0));
    assert!(!r.truncated);
}
