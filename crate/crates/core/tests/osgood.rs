use std::f64::consts::E;

use blowup_core::drift::{CustomDrift, DriftSpec};
use blowup_core::osgood::*;
use proptest::prelude::*;

#[test]
fn log_squared_drift_integrates_to_one() {
    let v = osgood_integral(&DriftSpec::PowerLog { p: 1.0, q: 2.0 }, E).unwrap();
    assert!(v.is_finite());
    assert!((v.value_or_lower_bound - 1.0).abs() < 1e-6, "{v:?}");
}

#[test]
fn rk_crossing_matches_quadrature() {
    let t = ode_level_crossing_time(&DriftSpec::power(2.0), 1.0, 2.0, 1e9, 10.0).unwrap();
    assert!((t - 0.5).abs() < 1e-3, "{t}");
    for (d, z0, c) in [
        (DriftSpec::power(3.0), 0.5, 1.0),
        (DriftSpec::power(1.5), 2.0, 0.7),
        (DriftSpec::PowerLog1p { p: 2.0, q: 1.0 }, 1.0, 1.0),
    ] {
        let q = ode_blowup_time(&d, z0, c).unwrap();
        // remaining time above the level is (1/c) int_level^inf ds/b
        let level = 1e12;
        let rest = osgood_integral(&d, level).unwrap().value_or_lower_bound / c;
        let rk = ode_level_crossing_time(&d, z0, c, level, 100.0).unwrap() + rest;
        assert!((rk - q).abs() < 1e-3 * q, "{}: {rk} vs {q}", d.describe());
    }
}

#[test]
fn power_classifier_threshold() {
    for (p, finite) in [(0.5, false), (0.99, false), (1.0, false), (1.01, true), (1.5, true), (2.0, true), (3.0, true)] {
        let v = osgood_integral(&DriftSpec::power(p), 1.0).unwrap();
        assert_eq!(v.is_finite(), finite, "p = {p}: {v:?}");
        if finite {
            assert!((v.value_or_lower_bound - 1.0 / (p - 1.0)).abs() < 1e-6 / (p - 1.0), "p = {p}: {v:?}");
        }
    }
}

#[test]
fn closure_drifts_use_the_fitted_tail() {
    let flags = DriftSpec::power(2.0).flags();
    let fast = DriftSpec::Custom(CustomDrift::new("s^2", flags, |s| s * s));
    let v = osgood_integral(&fast, 1.0).unwrap();
    assert!(v.is_finite() && matches!(v.tail_model, TailModel::Fitted { .. }));
    assert!((v.value_or_lower_bound - 1.0).abs() < 1e-3, "{v:?}");
    let slow = DriftSpec::Custom(CustomDrift::new("s^0.8", flags, |s| s.powf(0.8)));
    assert_eq!(osgood_integral(&slow, 1.0).unwrap().classification, Classification::Infinite);
    let border = DriftSpec::Custom(CustomDrift::new("s ln(1+s)", flags, |s| s * s.ln_1p()));
    assert_eq!(osgood_integral(&border, 1.0).unwrap().classification, Classification::Inconclusive);
    assert!(ode_blowup_time(&border, 1.0, 1.0).is_err());
}

#[test]
fn contradiction_sequences() {
    let levels: Vec<f64> = (1..=10).map(|n| n as f64).collect();
    let r = theorem13_contradiction_check(&levels, &DriftSpec::power(2.0), 1.0).unwrap();
    assert!(r.available && r.decreasing);
    assert_eq!(r.first_below_one, Some(2));
    for (i, l) in r.integrals.iter().zip(&levels) {
        assert!((i - 1.0 / l).abs() < 1e-9);
    }
    let r = theorem13_contradiction_check(&levels, &DriftSpec::Linear, 1.0).unwrap();
    assert!(!r.available && r.first_below_one.is_none());
    assert!(theorem13_contradiction_check(&[2.0, 1.0], &DriftSpec::power(2.0), 1.0).is_err());
}

#[test]
fn linear_drift_never_explodes() {
    assert_eq!(ode_blowup_time(&DriftSpec::Linear, 3.0, 1.0).unwrap(), f64::INFINITY);
    assert_eq!(ode_blowup_time(&DriftSpec::Zero, 3.0, 1.0).unwrap(), f64::INFINITY);
    assert_eq!(ode_level_crossing_time(&DriftSpec::Linear, 1.0, 1.0, 1e9, 5.0).unwrap(), f64::INFINITY);
}

proptest! {
    #[test]
    fn blowup_time_scales_inversely_with_c(p in 1.2f64..4.0, z0 in 0.1f64..10.0, c in 0.05f64..20.0) {
        let d = DriftSpec::power(p);
        let t1 = ode_blowup_time(&d, z0, 1.0).unwrap();
        let tc = ode_blowup_time(&d, z0, c).unwrap();
        prop_assert!((tc * c - t1).abs() <= 1e-9 * t1);
        // closed form z0^(1-p)/(p-1)
        let exact = z0.powf(1.0 - p) / (p - 1.0);
        prop_assert!((t1 - exact).abs() <= 1e-6 * exact);
    }

    #[test]
    fn blowup_time_decreases_in_z0(p in 1.2f64..4.0, z0 in 0.1f64..10.0, dz in 0.01f64..5.0) {
        let d = DriftSpec::power(p);
        prop_assert!(ode_blowup_time(&d, z0 + dz, 1.0).unwrap() < ode_blowup_time(&d, z0, 1.0).unwrap());
    }
}
