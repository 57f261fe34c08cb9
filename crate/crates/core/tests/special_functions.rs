use std::f64::consts::PI;

use blowup_core::quad::{integrate, integrate_breaks, logspace, Tol};
use blowup_core::special::*;
use proptest::prelude::*;

/// `exp(x^2) erfc(x)` by Taylor series for small `x` and a Lentz continued
/// fraction otherwise; used as an oracle for `E_{1/2}(-x)`.
fn scaled_erfc(x: f64) -> f64 {
    if x < 2.0 {
        // erfc(x) = 1 - 2/sqrt(pi) sum (-1)^n x^(2n+1)/(n!(2n+1))
        let mut s = 0.0;
        let mut t = x;
        for n in 0..200 {
            s += t / (2 * n + 1) as f64;
            t *= -x * x / (n + 1) as f64;
        }
        return (x * x).exp() * (1.0 - 2.0 / PI.sqrt() * s);
    }
    // erfc(x) e^{x^2} = (1/sqrt(pi)) / (x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let mut f = x;
    for k in (1..400).rev() {
        f = x + (k as f64 / 2.0) / f;
    }
    1.0 / (PI.sqrt() * f)
}

#[test]
fn ml_half_matches_erfc_identity() {
    assert!((ml_eval(0.5, 1.0).unwrap() - 0.427584).abs() < 1e-6);
    for k in 0..=200 {
        let x = 10.0 * k as f64 / 200.0;
        let v = ml_eval(0.5, x).unwrap();
        assert!((v - scaled_erfc(x)).abs() < 1e-8, "x {x}: {v} vs {}", scaled_erfc(x));
    }
}

#[test]
fn ml_exponential_case() {
    for k in 0..=500 {
        let x = 50.0 * k as f64 / 500.0;
        assert!((ml_eval(1.0, x).unwrap() - (-x).exp()).abs() < 1e-10);
    }
}

#[test]
fn ml_deriv_matches_finite_difference() {
    let h = 1e-4;
    for (beta, x) in [(0.75, 2.0), (0.75, 0.3), (0.4, 7.0), (0.9, 40.0)] {
        // d/dz E(z) at z=-x equals -d/dx E(-x)
        let fd = -(ml_eval(beta, x + h).unwrap() - ml_eval(beta, x - h).unwrap()) / (2.0 * h);
        let d = ml_deriv(beta, x).unwrap();
        assert!((fd - d).abs() < 1e-6, "beta {beta} x {x}: {d} vs {fd}");
        assert!(d > 0.0);
    }
}

#[test]
fn ml_range_and_monotonicity() {
    for beta in [0.2, 0.5, 0.8, 0.95] {
        let xs = logspace(1e-4, 1e6, 400);
        let vals: Vec<f64> = xs.iter().map(|&x| ml_eval(beta, x).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0], "beta {beta} not decreasing");
        }
        assert!(vals.iter().all(|&v| v > 0.0 && v <= 1.0));
    }
}

#[test]
fn lower_bound_below_ml() {
    for x in logspace(1e-3, 1e3, 100) {
        assert!(ml_lower_bound(0.6, x).unwrap() <= ml_eval(0.6, x).unwrap() + 1e-10);
    }
}

#[test]
fn c_beta_lambda_contract() {
    let c = c_beta_lambda_detail(0.75, 1.0).unwrap();
    assert!(c.value > 0.0 && c.value <= 1.0);
    // inequality behind the constant: e^{s} E_beta(-s^beta) >= c
    for s in logspace(1e-8, 1e2, 10_000) {
        let lhs = s.exp() * ml_eval(0.75, s.powf(0.75)).unwrap();
        assert!(lhs >= c.value - 1e-8, "s {s}");
    }
    // near beta = 1 the infimum behaves like e / Gamma(1 - beta), attained near s = 1
    for beta in [0.99, 0.999] {
        let c = c_beta_lambda_detail(beta, 1.0).unwrap();
        let approx = 1f64.exp() * rgamma(1.0 - beta);
        assert!((c.value / approx - 1.0).abs() < 0.05, "beta {beta}: {} vs {approx}", c.value);
        assert!((c.argmin - 1.0).abs() < 0.05);
    }
}

#[test]
fn stable_density_normalises() {
    for alpha in [0.8, 1.5, 1.9] {
        let p = StableParams::new(alpha, 1.0, 1, 1.0).unwrap();
        let f = |r: f64| stable_density(p, r).unwrap();
        let zmax = 50.0;
        let core = integrate_breaks(f, &[0.0, 1.0, 5.0, zmax], Tol::new(1e-13, 1e-12)).unwrap().value;
        // tail beyond zmax from the cdf
        let tail = 1.0 - stable_cdf_unit(alpha, zmax).unwrap();
        let total = 2.0 * (core + tail);
        assert!((total - 1.0).abs() < 1e-6, "alpha {alpha}: {total}");
    }
}

#[test]
fn inverse_subordinator_normalisation_and_mean() {
    for beta in [0.3, 0.5, 0.75, 0.9] {
        for t in [0.1f64, 1.0, 10.0] {
            let scale = t.powf(beta);
            let f = |v: f64| {
                let s = scale * v.exp();
                inv_subordinator_density(beta, t, s).unwrap() * s
            };
            let pts = [-40.0, -5.0, 0.0, 1.0, 2.5];
            let tol = Tol::new(1e-14, 1e-12);
            let mass = integrate_breaks(f, &pts, tol).unwrap().value;
            let mean = integrate_breaks(|v| f(v) * scale * v.exp(), &pts, tol).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-5, "beta {beta} t {t}: mass {mass}");
            let m_exact = scale * rgamma(1.0 + beta);
            assert!(((mean - m_exact) / m_exact).abs() < 1e-4, "beta {beta} t {t}: {mean} vs {m_exact}");
        }
    }
}

#[test]
fn inverse_subordinator_half_closed_form() {
    for t in [0.1f64, 1.0, 10.0] {
        for s in [0.01f64, 0.2, 1.0, 3.0, 10.0] {
            let exact = (-s * s / (4.0 * t)).exp() / (PI * t).sqrt();
            let v = inv_subordinator_density(0.5, t, s).unwrap();
            assert!((v - exact).abs() < 1e-6, "t {t} s {s}");
        }
    }
}

#[test]
fn caputo_of_linear() {
    let beta = 0.4;
    for dt in [1e-2, 5e-3] {
        let u: Vec<f64> = (0..=200).map(|k| k as f64 * dt).collect();
        let d = caputo_derivative(&u, dt, beta).unwrap();
        for (k, v) in d.iter().enumerate().skip(1) {
            let t = k as f64 * dt;
            assert!((v - t.powf(1.0 - beta) * rgamma(2.0 - beta)).abs() < 10.0 * dt.powf(2.0 - beta));
        }
    }
}

#[test]
fn caputo_eigenrelation() {
    let (beta, dt) = (0.6, 1e-3);
    let n = 2000;
    let ml = MittagLeffler::new(beta).unwrap();
    let u: Vec<f64> = (0..=n).map(|k| ml.eval((k as f64 * dt).powf(beta)).unwrap()).collect();
    let d = caputo_derivative(&u, dt, beta).unwrap();
    let mut worst: f64 = 0.0;
    for k in 100..=n {
        worst = worst.max((d[k] + u[k]).abs());
    }
    assert!(worst < 1e-2, "max error {worst}");
}

#[test]
fn fractional_integral_semigroup() {
    let dt = 1e-3;
    let f: Vec<f64> = (0..=1000).map(|k| (k as f64 * dt).sin()).collect();
    let a = fractional_integral(&fractional_integral(&f, dt, 0.4).unwrap(), dt, 0.3).unwrap();
    let b = fractional_integral(&f, dt, 0.7).unwrap();
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn caputo_inverts_fractional_integral() {
    let (dt, beta) = (1e-3, 0.5);
    let f: Vec<f64> = (0..=1000).map(|k| (k as f64 * dt).sin()).collect();
    let d = caputo_derivative(&fractional_integral(&f, dt, beta).unwrap(), dt, beta).unwrap();
    for k in 100..=1000 {
        assert!((d[k] - f[k]).abs() < 2e-3, "k {k}: {} vs {}", d[k], f[k]);
    }
}

#[test]
fn stable_cdf_symmetry_and_gauss() {
    let q = integrate(|z| (-z * z / 4.0).exp() / (4.0 * PI).sqrt(), 0.0, 1.3, Tol::default()).unwrap().value;
    assert!((stable_interval_prob(2.0, 1.0, 1.0, 0.0, 1.3).unwrap() - q).abs() < 1e-12);
    for z in [0.2, 1.0, 4.0, 30.0] {
        let s = stable_cdf_unit(1.3, z).unwrap() + stable_cdf_unit(1.3, -z).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn lower_bound_holds(beta in 0.05f64..0.99, lx in -3.0f64..3.0) {
        let x = 10f64.powf(lx);
        prop_assert!(ml_lower_bound(beta, x).unwrap() <= ml_eval(beta, x).unwrap() + 1e-10);
    }

    #[test]
    fn stable_density_symmetric(alpha in 0.6f64..2.0, r in 0.0f64..20.0) {
        let p = StableParams::new(alpha, 0.7, 1, 1.3).unwrap();
        prop_assert_eq!(stable_density(p, r).unwrap(), stable_density(p, -r).unwrap());
        prop_assert!(stable_density(p, r).unwrap() >= 0.0);
    }
}
