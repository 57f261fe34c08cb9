//! Model parameters shared by the kernels, noise and solver modules.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Spatial domain of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    /// The unit ball (the interval (-1, 1) in one dimension) with Dirichlet
    /// conditions.
    Ball,
    /// Whole space approximated by `[-half_width, half_width]` with zero
    /// extension outside.
    TruncatedSpace { half_width: f64 },
}

impl Domain {
    pub fn half_width(&self) -> f64 {
        match *self {
            Domain::Ball => 1.0,
            Domain::TruncatedSpace { half_width } => half_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub sigma: f64,
    #[serde(default = "one")]
    pub d: usize,
    /// Riesz exponent of spatially colored noise; `None` selects white noise.
    #[serde(default)]
    pub eta: Option<f64>,
    pub domain: Domain,
}

fn one() -> usize {
    1
}

impl ModelParams {
    /// Validated constructor. `beta = 1` is accepted as the classical limit.
    pub fn new(alpha: f64, beta: f64, nu: f64, sigma: f64, eta: Option<f64>, domain: Domain) -> Result<Self> {
        let p = ModelParams { alpha, beta, nu, sigma, d: 1, eta, domain };
        p.validate()?;
        Ok(p)
    }

    pub fn ball(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0, 1.0, None, Domain::Ball)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_eta(mut self, eta: Option<f64>) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    /// Upper end of the existence window `min(2, 1/beta) * alpha`.
    pub fn window(&self) -> f64 {
        (1.0 / self.beta).min(2.0) * self.alpha
    }

    /// `beta d / alpha`, the exponent of the kernel's L2 decay.
    pub fn decay(&self) -> f64 {
        self.beta * self.d as f64 / self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        let p = self;
        ensure(p.alpha > 0.0 && p.alpha <= 2.0, || format!("alpha must lie in (0, 2], got {}", p.alpha))?;
        ensure(p.beta > 0.0 && p.beta <= 1.0, || format!("beta must lie in (0, 1], got {}", p.beta))?;
        ensure(p.nu > 0.0 && p.nu.is_finite(), || format!("nu must be positive, got {}", p.nu))?;
        ensure(p.sigma >= 0.0 && p.sigma.is_finite(), || format!("sigma must be nonnegative, got {}", p.sigma))?;
        ensure(p.d >= 1, || "dimension must be at least 1".into())?;
        match p.eta {
            None => ensure((p.d as f64) < p.window(), || {
                format!("white noise needs d < min(2, 1/beta) alpha = {}", p.window())
            })?,
            Some(eta) => {
                ensure(eta > 0.0 && eta < p.d as f64, || format!("eta must lie in (0, d), got {eta}"))?;
                ensure(eta < p.window(), || {
                    format!("colored noise needs eta < min(2, 1/beta) alpha = {}", p.window())
                })?;
            }
        }
        if let Domain::TruncatedSpace { half_width } = p.domain {
            ensure(half_width > 1.0, || {
                format!("truncated domain half width must exceed 1, got {half_width}")
            })?;
        }
        Ok(())
    }
}

/// Uniform grid on `[-half_width, half_width]` including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub half_width: f64,
    pub points: Vec<f64>,
}

impl Grid {
    pub fn uniform(half_width: f64, n_points: usize) -> Result<Self> {
        ensure(n_points >= 3, || format!("grid needs at least 3 points, got {n_points}"))?;
        ensure(half_width > 0.0, || "grid half width must be positive".into())?;
        let h = 2.0 * half_width / (n_points - 1) as f64;
        let points = (0..n_points).map(|j| -half_width + j as f64 * h).collect();
        Ok(Grid { half_width, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points.len() - 1) as f64
    }

    /// Quadrature weights. Endpoints carry half weight; the Dirichlet
    /// functions used here vanish there, so this is both the trapezoid and
    /// the midpoint-cell rule.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let n = self.points.len();
        (0..n).map(|j| if j == 0 || j == n - 1 { 0.5 * h } else { h }).collect()
    }

    /// Indices of grid points inside `[-radius, radius]`.
    pub fn window(&self, radius: f64) -> Vec<usize> {
        let eps = 1e-12 * self.half_width;
        (0..self.len()).filter(|&j| self.points[j].abs() <= radius + eps).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn existence_window() {
        assert!(ModelParams::ball(2.0, 0.75).is_ok());
        // d = 1 < min(2, 1/beta) alpha fails for small alpha
        assert!(ModelParams::ball(0.4, 0.5).is_err());
        let colored = ModelParams::ball(2.0, 0.75).unwrap().with_eta(Some(0.5));
        assert!(colored.validate().is_ok());
        assert!(ModelParams::ball(2.0, 0.75).unwrap().with_eta(Some(1.0)).validate().is_err());
    }

    #[test]
    fn grid_weights_sum_to_length() {
        let g = Grid::uniform(1.0, 513).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert_eq!(g.points[256], 0.0);
        assert_eq!(g.window(1.0).len(), 513);
    }

    #[test]
    fn params_roundtrip_through_json() {
        let p = ModelParams::ball(1.8, 0.8).unwrap().with_eta(Some(0.3));
        let s = serde_json::to_string(&p).unwrap();
        let q: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
