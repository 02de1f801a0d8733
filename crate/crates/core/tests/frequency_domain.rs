mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use peh_core::fourier::{fundamental_by_quadrature, fundamental_harmonic};
use peh_core::impedance::{equivalent_impedance, match_report, MatchOptions, normalized_impedance, pv_sece_bound_normalized, pv_sshi_bound_normalized, sshi_circle};
use peh_core::optimize::{maximize, SearchOptions};
use peh_core::power::{power_at, power_limit_with_leakage};
use peh_core::waveform::{synthesize_vp, work_cycle};
use peh_core::{Complex64, Topology, TuningPoint};
use proptest::prelude::*;

fn any_tuning() -> impl Strategy<Value = TuningPoint> {
    (0usize..4, -FRAC_PI_2..=FRAC_PI_2, 0.0f64..=1.0)
        .prop_map(|(t, phi, s)| TuningPoint::from_fraction(Topology::ALL[t], phi, s).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn analytic_fundamental_matches_quadrature(t in any_tuning(), gamma in -0.95f64..0.5) {
        let wave = synthesize_vp(&t, gamma, 1.0).unwrap();
        let a = fundamental_harmonic(&wave);
        let q = fundamental_by_quadrature(&wave, 1e-13);
        prop_assert!((a - q).norm() <= 1e-9 * a.norm(), "{:?}: {} vs {}", t, a, q);
    }

    #[test]
    fn work_cycle_area_matches_real_part(t in any_tuning(), i_h in 1e-6f64..1e-2) {
        let s = common::weak();
        let w = s.natural_frequency();
        let ze = equivalent_impedance(&s, &t, w).unwrap();
        let wave = synthesize_vp(&t, s.gamma(), i_h / (w * s.cp())).unwrap();
        let wc = work_cycle(&wave, i_h, w);
        let period = 2.0 * PI / w;
        let expected = 0.5 * i_h * i_h * ze.electrical().re;
        prop_assert!(rel(wc.area / period, expected) < 1e-3, "{:?}: {} vs {}", t, wc.area / period, expected);
        prop_assert!(rel(wc.e_h + wc.e_d, wc.area) < 1e-3);
        prop_assert!(wc.e_h >= 0.0 && wc.e_d >= -1e-15 * wc.area.abs());
    }

    #[test]
    fn pv_s_sshi_samples_stay_inside_circle(phi in -FRAC_PI_2..=FRAC_PI_2, s in 0.0f64..=1.0, gamma in -0.95f64..0.5) {
        let t = TuningPoint::from_fraction(Topology::SeriesSshi, phi, s).unwrap();
        let (z, _, _) = normalized_impedance(&t, gamma).unwrap();
        let c = sshi_circle(gamma).unwrap();
        prop_assert!(c.signed_distance(z) <= 1e-9, "{:?} {}", t, z);
        prop_assert!(z.im >= -1.0 - c.radius - 1e-9 && z.im <= -1.0 + c.radius + 1e-9);
    }

    #[test]
    fn every_interface_is_passive(t in any_tuning(), gamma in -0.95f64..0.5) {
        let (z, eh, ed) = normalized_impedance(&t, gamma).unwrap();
        prop_assert!(z.re >= -1e-12 && eh >= 0.0 && ed >= -1e-12, "{:?} {}", t, z);
    }

    #[test]
    fn leakage_never_increases_power(t in any_tuning(), wr in 0.85f64..1.15, rp_lo in 1e4f64..1e6, factor in 1.0f64..100.0) {
        let w = common::strong().natural_frequency() * wr;
        let p_lo = power_at(&common::strong_with(rp_lo), &t, w).unwrap();
        let p_hi = power_at(&common::strong_with(rp_lo * factor), &t, w).unwrap();
        let p_inf = power_at(&common::strong_with(f64::INFINITY), &t, w).unwrap();
        prop_assert!(p_lo <= p_hi * (1.0 + 1e-12) && p_hi <= p_inf * (1.0 + 1e-12));
    }

    #[test]
    fn power_never_exceeds_limit(t in any_tuning(), wr in 0.8f64..1.25, strong in any::<bool>(), rp in prop_oneof![Just(f64::INFINITY), 1e5f64..1e7]) {
        let s = if strong { common::strong_with(rp) } else { common::weak_with(rp) };
        let w = s.natural_frequency() * wr;
        let p = power_at(&s, &t, w).unwrap();
        let lim = power_limit_with_leakage(&s, w).unwrap();
        prop_assert!(p <= lim * (1.0 + 1e-9), "{} > {}", p, lim);
    }

    #[test]
    fn refinement_never_loses_to_coarse_grid(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.1f64..5.0) {
        let r = maximize(|x| -c * ((x[0] - a).powi(2) + (x[1] - b).powi(2)) + (3.0 * x[0]).sin(), &[(-3.0, 3.0), (-3.0, 3.0)], &SearchOptions::default()).unwrap();
        prop_assert!(r.value >= r.coarse_value);
    }
}

#[test]
fn extreme_loads_lie_on_the_closed_form_circles() {
    let gamma = -0.6;
    let c = sshi_circle(gamma).unwrap();
    assert!((c.radius - 8.0 / PI).abs() < 1e-14 && (c.center - Complex64::new(8.0 / PI, -1.0)).norm() < 1e-14);
    for i in 0..181 {
        let phi = -FRAC_PI_2 + PI * i as f64 / 180.0;
        let s_sshi = normalized_impedance(&TuningPoint::series_sshi(phi, 0.0).unwrap(), gamma).unwrap().0;
        assert!((s_sshi - pv_sshi_bound_normalized(phi, gamma).unwrap()).norm() < 1e-9, "phi {phi}");
        assert!(c.signed_distance(s_sshi).abs() < 1e-9);
        let sece = normalized_impedance(&TuningPoint::sece(phi).unwrap(), gamma).unwrap().0;
        assert!((sece - pv_sece_bound_normalized(phi).unwrap()).norm() < 1e-9, "phi {phi}");
        assert_eq!(pv_sshi_bound_normalized(phi, 0.0).unwrap(), pv_sece_bound_normalized(phi).unwrap());
    }
}

#[test]
fn impedance_is_independent_of_excitation_level() {
    let t = TuningPoint::series_sshi(0.3, 0.4).unwrap();
    let a = common::strong();
    let b = a.with_excitation(peh_core::Excitation::BaseAcceleration(0.49)).unwrap();
    let w = a.natural_frequency();
    assert_eq!(equivalent_impedance(&a, &t, w).unwrap(), equivalent_impedance(&b, &t, w).unwrap());
    let ratio = power_at(&a, &t, w).unwrap() / power_at(&b, &t, w).unwrap();
    assert!((ratio - 100.0).abs() < 1e-9);
}

#[test]
fn strong_conjugate_match_sits_just_outside_the_sshi_disk() {
    let s = common::strong();
    let w = s.natural_frequency();
    let opts = MatchOptions { search: SearchOptions::default(), ..MatchOptions::default() };
    let m = match_report(&s, Topology::SeriesSshi, w, true, &opts).unwrap();
    let c = sshi_circle(s.gamma()).unwrap();
    let rim = c.signed_distance(m.target_normalized) * s.impedance_scale(w) / s.mechanical_impedance(w).unwrap().value.norm();
    assert!(!m.feasible && rim > 0.0);
    assert!(m.relative_distance >= rim * (1.0 - 1e-9) && m.relative_distance < rim * 1.05, "{} vs {rim}", m.relative_distance);
    let inside = match_report(&s, Topology::SeriesSshi, 1.1 * w, true, &opts).unwrap();
    assert!(inside.feasible, "{}", inside.relative_distance);
}
