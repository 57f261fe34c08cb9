//! Kernels of the space-time fractional heat operator.
//!
//! The free kernel is the subordinated stable density
//! `G(t, x) = int_0^inf p(s, x) f_{E_t}(s) ds`, where `f_{E_t}` is the density
//! of the inverse `beta`-stable subordinator. Since
//! `f_{E_t}(s) ds = M_beta(z) dz` with `s = t^beta z`, every subordinated
//! integral is computed in `v = ln z`, which is independent of `t`.
//!
//! The Dirichlet kernel on `(-L, L)` is expanded in the sine basis,
//! `G_B(t, x, y) = sum_n E_beta(-mu_n t^beta) phi_n(x) phi_n(y)`. For
//! `alpha < 2` the eigenpairs are the asymptotic approximation
//! `mu_n = nu ((n pi/2 - (2 - alpha) pi/8)/L)^alpha` with Laplacian
//! eigenfunctions; [`SpectralBasis::approximate`] flags this.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{ensure, invalid, Result};
use crate::model::{Grid, ModelParams};
use crate::quad::{integrate_breaks, Tol};
use crate::special::{
    rgamma, stable_density, stable_interval_prob, wright_m, MittagLeffler, StableParams,
};

/// Lower cutoff in `v = ln(s / t^beta)`; the inverse subordinator puts
/// mass `~ M_beta(0) e^V_LO` below it.
const V_LO: f64 = -45.0;

/// Upper cutoff in `v` beyond which `M_beta` is below `1e-20`.
fn v_hi(beta: f64) -> f64 {
    let q = 1.0 / (1.0 - beta);
    let a0 = (1.0 - beta) * beta.powf(beta * q);
    ((60.0 / a0).powf(1.0 - beta)).ln().max(0.5)
}

/// `int_0^inf f(s) P(E_t in ds)` for a bounded, piecewise smooth `f`.
///
/// `scales` are values of `s` near which `f` changes character; they become
/// quadrature breakpoints.
pub fn subordinate<F>(beta: f64, t: f64, mut f: F, scales: &[f64]) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    ensure(t > 0.0, || format!("t must be positive, got {t}"))?;
    if beta == 1.0 {
        return Ok(f(t));
    }
    let tb = t.powf(beta);
    let hi = v_hi(beta);
    let mut pts = vec![V_LO, 0.0, hi];
    // M_beta concentrates near z = 1 with width O(1 - beta)
    for k in [-8.0, -4.0, -2.0, -1.0, 1.0, 2.0] {
        let v = k * (1.0 - beta);
        if v > V_LO && v < hi {
            pts.push(v);
        }
    }
    let mut v = -2.0;
    while v > V_LO {
        pts.push(v);
        v -= 4.0;
    }
    for &s in scales {
        if s > 0.0 {
            let v = (s / tb).ln();
            if v > V_LO && v < hi {
                pts.push(v);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut err = None;
    let r = integrate_breaks(
        |v| {
            let z = v.exp();
            match wright_m(beta, z) {
                Ok(m) => z * m * f(tb * z),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        &pts,
        Tol::new(1e-14, 1e-11).with_max_intervals(3000),
    );
    if let Some(e) = err {
        return Err(e);
    }
    let lump = rgamma(1.0 - beta) * V_LO.exp() * f(tb * V_LO.exp());
    Ok(r?.value + lump)
}

fn stable_params(params: &ModelParams, s: f64) -> Result<StableParams> {
    StableParams::new(params.alpha, s, params.d, params.nu)
}

/// Free-space kernel `G(t, r)`, isotropic in `r`.
///
/// At `r = 0` with `alpha <= d` and `beta < 1` the kernel is infinite.
pub fn green_free(params: &ModelParams, t: f64, r: f64) -> Result<f64> {
    params.validate()?;
    ensure(t > 0.0, || format!("t must be positive, got {t}"))?;
    let r = r.abs();
    if params.beta == 1.0 {
        return stable_density(stable_params(params, t)?, r);
    }
    let (alpha, beta) = (params.alpha, params.beta);
    let df = params.d as f64;
    if r == 0.0 {
        // p(s, 0) = c (nu s)^(-d/alpha) and E[E_1^(-g)] = Gamma(1-g)/Gamma(1-beta g)
        let g = df / alpha;
        if g >= 1.0 {
            return Ok(f64::INFINITY);
        }
        let p1 = stable_density(stable_params(params, 1.0)?, 0.0)?;
        let moment = gamma(1.0 - g) * rgamma(1.0 - beta * g);
        return Ok(p1 * t.powf(-beta * g) * moment);
    }
    // p(s, r) changes regime where (nu s)^(1/alpha) ~ r
    let s_r = r.powf(alpha) / params.nu;
    let mut err = None;
    let v = subordinate(
        beta,
        t,
        |s| match stable_params(params, s).and_then(|p| stable_density(p, r)) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &[s_r, 0.1 * s_r, 10.0 * s_r],
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `int_a^b G(t, x - y) dy` in one dimension.
pub fn free_interval_mass(params: &ModelParams, t: f64, x: f64, a: f64, b: f64) -> Result<f64> {
    params.validate()?;
    ensure(params.d == 1, || "interval masses are one-dimensional".into())?;
    ensure(a < b, || format!("need a < b, got [{a}, {b}]"))?;
    let (alpha, nu) = (params.alpha, params.nu);
    let dist = (a - x).abs().min((b - x).abs()).max(1e-300);
    let mut err = None;
    let v = subordinate(
        params.beta,
        t,
        |s| match stable_interval_prob(alpha, nu, s, a - x, b - x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &[dist.powf(alpha) / nu, (b - a).powf(alpha) / nu],
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(v.clamp(0.0, 1.0)),
    }
}

/// Largest kernel mass that leaves `[-half_width, half_width]` from a
/// starting point in the unit ball, over the time range `(0, t]`. The mass
/// outside grows with time, so it is evaluated at `t`.
pub fn free_mass_outside(params: &ModelParams, t: f64, half_width: f64) -> Result<f64> {
    ensure(half_width > 1.0, || "half width must exceed 1".into())?;
    let inside = free_interval_mass(params, t, 1.0, -half_width, half_width)?;
    Ok((1.0 - inside).max(0.0))
}

/// The constant `C*` in `int G(t, x)^2 dx = C* t^(-beta d/alpha)`.
///
/// By Plancherel, with `G^(t, xi) = E_beta(-nu t^beta |xi|^alpha)`,
/// `C* = nu^(-d/alpha) |S^(d-1)| (2 pi)^(-d) int_0^inf E_beta(-r^alpha)^2 r^(d-1) dr`.
pub fn c_star(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let (alpha, beta) = (params.alpha, params.beta);
    let df = params.d as f64;
    ensure(df < 2.0 * alpha, || format!("the L2 identity needs d < 2 alpha, got d = {df}, alpha = {alpha}"))?;
    let ml = MittagLeffler::new(beta)?;
    // tail from E_beta(-x) ~ x^-1/Gamma(1-beta) - x^-2/Gamma(1-2beta)
    let (a, b) = (rgamma(1.0 - beta), -rgamma(1.0 - 2.0 * beta));
    let big_r = if beta == 1.0 { 12.0 } else { 1e4f64.powf(1.0 / alpha) };
    let tail = a * a * big_r.powf(df - 2.0 * alpha) / (2.0 * alpha - df)
        + 2.0 * a * b * big_r.powf(df - 3.0 * alpha) / (3.0 * alpha - df)
        + b * b * big_r.powf(df - 4.0 * alpha) / (4.0 * alpha - df);
    let mut err = None;
    let mut pts = vec![0.0, 1.0];
    let mut p = 2.0;
    while p < big_r {
        pts.push(p);
        p *= 2.0;
    }
    pts.push(big_r);
    let core = integrate_breaks(
        |r| {
            let e = ml.eval(r.powf(alpha)).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            });
            e * e * r.powf(df - 1.0)
        },
        &pts,
        Tol::new(1e-14, 1e-12),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let sphere = 2.0 * PI.powf(df / 2.0) * rgamma(df / 2.0);
    Ok(params.nu.powf(-df / alpha) * sphere * (2.0 * PI).powf(-df) * (core.value + tail))
}

/// `int G(t, x)^2 dx`.
pub fn green_l2(params: &ModelParams, t: f64) -> Result<f64> {
    ensure(t > 0.0, || format!("t must be positive, got {t}"))?;
    Ok(c_star(params)? * t.powf(-params.decay()))
}

/// Dirichlet eigenpairs sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub mu: Vec<f64>,
    /// `phi[n][j]` is mode `n + 1` at grid point `j`.
    pub phi: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub grid: Grid,
    pub half_width: f64,
    /// True when the eigenpairs are the `alpha < 2` asymptotic approximation.
    pub approximate: bool,
}

impl SpectralBasis {
    pub fn n_modes(&self) -> usize {
        self.mu.len()
    }

    /// Mode `n` (1-based) at an arbitrary point of `[-L, L]`.
    pub fn phi_at(&self, n: usize, x: f64) -> f64 {
        mode(n, self.half_width, x)
    }

    pub fn sup_phi(&self) -> f64 {
        1.0 / self.half_width.sqrt()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    /// Mode coefficients `<f, phi_n>`.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        self.phi.iter().map(|p| self.inner(f, p)).collect()
    }

    /// Grid values of `sum_n c_n phi_n`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (c, p) in coeffs.iter().zip(&self.phi) {
            for (o, v) in out.iter_mut().zip(p) {
                *o += c * v;
            }
        }
        out
    }

    pub fn gram(&self, k: usize) -> Vec<Vec<f64>> {
        let k = k.min(self.n_modes());
        (0..k).map(|i| (0..k).map(|j| self.inner(&self.phi[i], &self.phi[j])).collect()).collect()
    }
}

fn mode(n: usize, half_width: f64, x: f64) -> f64 {
    if x.abs() >= half_width {
        return 0.0;
    }
    (n as f64 * PI * (x + half_width) / (2.0 * half_width)).sin() / half_width.sqrt()
}

/// Eigenvalue `mu_n` of `nu (-Delta)^(alpha/2)` on `(-L, L)`.
pub fn dirichlet_eigenvalue(alpha: f64, nu: f64, half_width: f64, n: usize) -> f64 {
    let nf = n as f64;
    let k = if alpha == 2.0 { nf * PI / 2.0 } else { nf * PI / 2.0 - (2.0 - alpha) * PI / 8.0 };
    nu * (k / half_width).powf(alpha)
}

/// First `n_modes` Dirichlet eigenpairs on the domain of `params`, sampled on
/// `grid` (whose half width must match the domain).
pub fn dirichlet_eigenpairs(params: &ModelParams, n_modes: usize, grid: &Grid) -> Result<SpectralBasis> {
    params.validate()?;
    ensure(params.d == 1, || "eigenpairs are implemented in one dimension".into())?;
    ensure(n_modes >= 1, || "need at least one mode".into())?;
    let half_width = params.domain.half_width();
    ensure((grid.half_width - half_width).abs() <= 1e-12 * half_width, || {
        format!("grid half width {} does not match the domain {}", grid.half_width, half_width)
    })?;
    // mode n has wavelength 4L/n; require 8 points per wavelength
    let m = grid.len();
    if 4 * n_modes + 1 > m {
        return invalid(format!(
            "grid of {m} points does not resolve {n_modes} modes; need at least {} points",
            4 * n_modes + 1
        ));
    }
    let mu = (1..=n_modes).map(|n| dirichlet_eigenvalue(params.alpha, params.nu, half_width, n)).collect();
    let phi = (1..=n_modes)
        .map(|n| grid.points.iter().map(|&x| mode(n, half_width, x)).collect())
        .collect();
    Ok(SpectralBasis {
        mu,
        phi,
        weights: grid.weights(),
        grid: grid.clone(),
        half_width,
        approximate: params.alpha < 2.0,
    })
}

/// Truncated eigenexpansion with a crude majorant of the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSum {
    pub value: f64,
    pub tail_bound: f64,
}

/// `G_B(t, x, y)` by its `N`-term eigenexpansion.
pub fn green_ball(params: &ModelParams, basis: &SpectralBasis, t: f64, x: f64, y: f64) -> Result<KernelSum> {
    ensure(t > 0.0, || format!("t must be positive, got {t}"))?;
    let l = basis.half_width;
    ensure(x.abs() <= l && y.abs() <= l, || format!("points must lie in [-{l}, {l}]"))?;
    let ml = MittagLeffler::new(params.beta)?;
    let tb = t.powf(params.beta);
    let mut value = 0.0;
    for (k, &mu) in basis.mu.iter().enumerate() {
        value += ml.eval(mu * tb)? * basis.phi_at(k + 1, x) * basis.phi_at(k + 1, y);
    }
    let n = basis.n_modes();
    let tail_bound = ml.eval(basis.mu[n - 1] * tb)? * basis.sup_phi().powi(2) * n as f64;
    Ok(KernelSum { value, tail_bound })
}

/// Result of the kernel mass sweep over the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBound {
    pub min_mass: f64,
    pub argmin_x: f64,
    pub argmin_r: f64,
    /// `c0 = inf { t^(beta d/alpha) G(t, x) : |x| <= t^(beta/alpha) } = G(1, 1)`.
    pub c0: f64,
    /// The proof's lower bound `c0 pi^(d/2) / (2^d Gamma(d/2 + 1))`.
    pub proof_constant: f64,
}

/// `min_{x, r} int_{-1}^{1} G(r, x - y) dy` over the given grids.
pub fn ball_mass_lower_bound(params: &ModelParams, r_grid: &[f64], x_grid: &[f64]) -> Result<MassBound> {
    ensure(!r_grid.is_empty() && !x_grid.is_empty(), || "grids must be nonempty".into())?;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &r in r_grid {
        ensure(r > 0.0 && r < 1.0, || format!("r must lie in (0, 1), got {r}"))?;
        for &x in x_grid {
            ensure(x.abs() <= 1.0, || format!("x must lie in the unit ball, got {x}"))?;
            let m = free_interval_mass(params, r, x, -1.0, 1.0)?;
            if m < best.0 {
                best = (m, x, r);
            }
        }
    }
    let c0 = green_free(params, 1.0, 1.0)?;
    let df = params.d as f64;
    let proof_constant = c0 * PI.powf(df / 2.0) / (2f64.powf(df) * gamma(df / 2.0 + 1.0));
    Ok(MassBound { min_mass: best.0, argmin_x: best.1, argmin_r: best.2, c0, proof_constant })
}

/// `int G(t, x)^2 dx` by direct quadrature in `x` (one dimension), an
/// independent check on [`green_l2`].
pub fn green_l2_spatial(params: &ModelParams, t: f64) -> Result<f64> {
    ensure(params.d == 1, || "spatial quadrature is one-dimensional".into())?;
    ensure(2.0 * params.decay() < 1.0 || params.beta == 1.0 || params.alpha > params.d as f64, || {
        "kernel not square integrable at the origin".into()
    })?;
    let scale = (params.nu * t.powf(params.beta)).powf(1.0 / params.alpha);
    let mut err = None;
    let mut g2 = |x: f64| match green_free(params, t, x) {
        Ok(v) => v * v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let pts: Vec<f64> = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|k| k * scale).collect();
    let core = integrate_breaks(&mut g2, &pts, Tol::new(1e-12, 1e-9))?;
    // beyond 64 scales G decays at least like r^(-1-alpha)
    let r_end = 64.0 * scale;
    let g_end = g2(r_end);
    if let Some(e) = err {
        return Err(e);
    }
    let tail = if params.alpha < 2.0 { g_end * r_end / (1.0 + 2.0 * params.alpha) } else { 0.0 };
    Ok(2.0 * (core.value + tail))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subordination_mass_is_one() {
        for beta in [0.3, 0.5, 0.75, 0.9, 0.999] {
            let m = subordinate(beta, 2.0, |_| 1.0, &[]).unwrap();
            assert!((m - 1.0).abs() < 1e-9, "beta {beta}: {m}");
        }
    }

    #[test]
    fn green_free_at_origin_closed_form_matches_quadrature() {
        let p = ModelParams::ball(2.0, 0.75).unwrap();
        let g0 = green_free(&p, 1.0, 0.0).unwrap();
        let near = green_free(&p, 1.0, 1e-7).unwrap();
        assert!((g0 - near).abs() < 1e-5 * g0, "{g0} vs {near}");
    }

    #[test]
    fn l2_constant_classical_limit() {
        let p = ModelParams::ball(2.0, 1.0).unwrap();
        let v = green_l2(&p, 1.0).unwrap();
        assert!((v - 1.0 / (8.0 * PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn eigenpairs_resolution_guard() {
        let p = ModelParams::ball(2.0, 0.75).unwrap();
        let g = Grid::uniform(1.0, 41).unwrap();
        assert!(dirichlet_eigenpairs(&p, 10, &g).is_ok());
        assert!(dirichlet_eigenpairs(&p, 11, &g).is_err());
    }

    #[test]
    fn first_eigenvalue() {
        assert!((dirichlet_eigenvalue(2.0, 1.0, 1.0, 1) - 2.4674011002723395).abs() < 1e-14);
        let m = dirichlet_eigenvalue(1.5, 1.0, 1.0, 1);
        assert!((m - (7.0 * PI / 16.0).powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn basis_orthonormal() {
        let p = ModelParams::ball(2.0, 0.75).unwrap();
        let g = Grid::uniform(1.0, 513).unwrap();
        let b = dirichlet_eigenpairs(&p, 64, &g).unwrap();
        for (i, row) in b.gram(10).iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
        assert!(b.phi[0][1..512].iter().all(|&v| v > 0.0));
    }
}
