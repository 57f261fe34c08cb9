use blowup_lab::stats::{mean_var, median, ols, quantile, wilson_interval, Z95};
use proptest::prelude::*;

proptest! {
    #[test]
    fn wilson_brackets_the_proportion(n in 1usize..2000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
        prop_assert_eq!(lo == 0.0, k == 0);
    }

    #[test]
    fn wilson_narrows_with_more_trials(k in 0usize..50, m in 2usize..20) {
        let n = 100;
        let (lo1, hi1) = wilson_interval(k, n, Z95);
        let (lo2, hi2) = wilson_interval(k * m, n * m, Z95);
        prop_assert!(hi2 - lo2 < hi1 - lo1);
    }

    #[test]
    fn quantiles_are_monotone_and_bounded(v in prop::collection::vec(-1e6f64..1e6, 1..200), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (qa, qb) = (quantile(&v, a.min(b)), quantile(&v, a.max(b)));
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= qa && qa <= qb && qb <= hi);
    }

    #[test]
    fn median_ignores_order(mut v in prop::collection::vec(-1e3f64..1e3, 1..100)) {
        let m = median(&v);
        v.reverse();
        prop_assert_eq!(m, median(&v));
    }

    #[test]
    fn ols_recovers_exact_lines(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|x| a + b * x).collect();
        let (fa, fb) = ols(&x, &y);
        prop_assert!((fa - a).abs() < 1e-9 && (fb - b).abs() < 1e-9);
    }

    #[test]
    fn variance_is_shift_invariant(v in prop::collection::vec(-1e3f64..1e3, 2..100), c in -1e3f64..1e3) {
        let (_, s1) = mean_var(&v);
        let w: Vec<f64> = v.iter().map(|x| x + c).collect();
        let (_, s2) = mean_var(&w);
        prop_assert!((s1 - s2).abs() <= 1e-8 * (1.0 + s1));
    }
}
