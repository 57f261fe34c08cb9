use blowup_core::kernels::dirichlet_eigenpairs;
use blowup_core::model::{Grid, ModelParams};
use blowup_core::noise::*;
use proptest::prelude::*;

fn ball_basis(m: usize, n: usize) -> blowup_core::kernels::SpectralBasis {
    let p = ModelParams::ball(2.0, 0.75).unwrap();
    dirichlet_eigenpairs(&p, n, &Grid::uniform(1.0, m).unwrap()).unwrap()
}

#[test]
fn white_variance_matches_cell_density() {
    let grid = Grid::uniform(1.0, 101).unwrap();
    let dt = 0.01;
    let r = sample_white(&grid, dt, 10_000, 9).unwrap();
    // interior cells share one measure; 99 x 10^4 draws
    let w = r.cell_measure[1];
    let vals: Vec<f64> = (0..r.n_steps).flat_map(|k| r.slice(k)[1..100].to_vec()).collect();
    let var = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
    assert!((var / (dt / w) - 1.0).abs() < 0.01, "{var} vs {}", dt / w);
}

#[test]
fn white_cells_are_uncorrelated() {
    let grid = Grid::uniform(1.0, 11).unwrap();
    let r = sample_white(&grid, 1.0, 1_000_000, 2).unwrap();
    let w = r.cell_measure[3];
    let corr = (0..r.n_steps).map(|k| r.slice(k)[3] * r.slice(k)[4]).sum::<f64>() / r.n_steps as f64 * w;
    assert!(corr.abs() < 3.0 / 1000.0, "{corr}");
}

#[test]
fn white_noise_is_reproducible_and_scales() {
    let grid = Grid::uniform(1.0, 21).unwrap();
    let a = sample_white(&grid, 0.01, 50, 4).unwrap();
    assert_eq!(a, sample_white(&grid, 0.01, 50, 4).unwrap());
    assert_ne!(a.increments, sample_white(&grid, 0.01, 50, 5).unwrap().increments);
    let b = sample_white(&grid, 0.04, 50, 4).unwrap();
    for (x, y) in a.increments.iter().zip(&b.increments) {
        assert!((y - 2.0 * x).abs() < 1e-14);
    }
}

#[test]
fn colored_slices_have_the_riesz_covariance() {
    let grid = Grid::uniform(1.0, 9).unwrap();
    let eta = 0.5;
    let c = riesz_covariance(&grid, eta).unwrap();
    let n = 100_000;
    let r = sample_colored(&grid, 1.0, n, eta, 1).unwrap();
    let m = grid.len();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let emp = (0..n).map(|k| r.slice(k)[i] * r.slice(k)[j]).sum::<f64>() / n as f64;
            worst = worst.max((emp - c[(i, j)]).abs() / c[(i, j)]);
        }
    }
    assert!(worst < 0.05, "{worst}");
    assert_eq!(r, sample_colored(&grid, 1.0, n, eta, 1).unwrap());
}

#[test]
fn riesz_covariance_is_symmetric() {
    let grid = Grid::uniform(1.0, 17).unwrap();
    let c = riesz_covariance(&grid, 0.3).unwrap();
    assert!((&c - c.transpose()).amax() < 1e-14 * c.amax());
    assert!(riesz_covariance(&grid, 1.2).is_err());
}

#[test]
fn small_eta_decorrelates_less_than_large_eta() {
    // correlation of neighbouring cells drops as the kernel sharpens
    let grid = Grid::uniform(1.0, 33).unwrap();
    let corr = |eta: f64| {
        let c = riesz_covariance(&grid, eta).unwrap();
        c[(10, 20)] / (c[(10, 10)] * c[(20, 20)]).sqrt()
    };
    assert!(corr(0.1) > corr(0.5) && corr(0.5) > corr(0.9));
}

#[test]
fn kappa_converges_under_grid_refinement() {
    let a = kappa(&ball_basis(513, 8), 0.5).unwrap();
    let b = kappa(&ball_basis(1025, 8), 0.5).unwrap();
    assert!(((a - b) / b).abs() < 5e-3, "{a} vs {b}");
    for eta in [0.1, 0.5, 0.9] {
        assert!(kappa(&ball_basis(129, 8), eta).unwrap() > 0.0);
    }
}

#[test]
fn kappa_small_eta_limit_is_squared_mean() {
    let b = ball_basis(257, 8);
    let mean: f64 = b.phi[0].iter().zip(&b.weights).map(|(p, w)| p * w).sum();
    let k = kappa(&b, 1e-6).unwrap();
    assert!((k - mean * mean).abs() < 1e-4 * mean * mean, "{k} vs {}", mean * mean);
}

#[test]
fn principal_mode_noise_has_variance_kappa() {
    let b = ball_basis(129, 8);
    let eta = 0.5;
    let k = kappa(&b, eta).unwrap();
    let noise = ModeNoise::new(&b, NoiseKind::Colored { eta }, 3).unwrap();
    let n = 100_000;
    let dt = 0.01;
    let var = (0..n).map(|s| noise.increment(s, dt)[0].powi(2)).sum::<f64>() / (n as f64 * dt);
    assert!((var / k - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{var} vs {k}");
    let white = ModeNoise::new(&b, NoiseKind::White, 3).unwrap();
    let var = (0..n).map(|s| white.increment(s, dt)[0].powi(2)).sum::<f64>() / (n as f64 * dt);
    assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{var}");
}

#[test]
fn bridge_midpoints_have_bridge_variance() {
    let b = ball_basis(33, 4);
    let noise = ModeNoise::new(&b, NoiseKind::White, 8).unwrap();
    let dt = 0.5;
    let n = 50_000;
    let mut s = 0.0;
    for k in 0..n {
        let total = noise.increment(k, dt);
        let (first, second) = noise.bridge(k, 0, 0, dt, &total);
        assert!((first[1] + second[1] - total[1]).abs() < 1e-15);
        // each half is an increment over dt/2
        s += first[2] * first[2];
    }
    let var = s / n as f64;
    assert!((var / (0.5 * dt) - 1.0).abs() < 0.03, "{var}");
}

proptest! {
    #[test]
    fn derived_seeds_differ_on_each_counter(seed in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(seed, &[a, 0]), derive_seed(seed, &[b, 0]));
        prop_assert_ne!(derive_seed(seed, &[0, a]), derive_seed(seed, &[0, b]));
    }

    #[test]
    fn pair_integral_is_symmetric_and_positive(a in -1.0f64..0.0, w1 in 0.01f64..0.5, c in -1.0f64..0.0, w2 in 0.01f64..0.5, eta in 0.05f64..0.95) {
        let i1 = riesz_pair_integral(a, a + w1, c, c + w2, eta);
        let i2 = riesz_pair_integral(c, c + w2, a, a + w1, eta);
        prop_assert!(i1 > 0.0);
        prop_assert!((i1 - i2).abs() <= 1e-12 * i1.abs().max(1.0));
    }
}
