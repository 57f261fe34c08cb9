//! Discretized space-time white noise and Riesz-kernel colored noise.
//!
//! Random numbers come from ChaCha streams keyed by the master seed and a
//! tuple of counters (step, refinement depth, index), so a path is
//! reproduced exactly whatever the order in which it is computed.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::kernels::SpectralBasis;
use crate::model::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    White,
    Colored { eta: f64 },
}

impl NoiseKind {
    pub fn from_eta(eta: Option<f64>) -> Self {
        match eta {
            None => NoiseKind::White,
            Some(eta) => NoiseKind::Colored { eta },
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit hash of a seed and a counter tuple.
pub fn derive_seed(seed: u64, counters: &[u64]) -> u64 {
    counters.iter().fold(splitmix(seed), |h, &c| splitmix(h ^ splitmix(c.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn counter_rng(seed: u64, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, counters))
}

pub fn standard_normals(seed: u64, counters: &[u64], n: usize) -> Vec<f64> {
    let mut rng = counter_rng(seed, counters);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Noise increments on the cells of a grid, row-major by time step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub increments: Vec<f64>,
    pub n_steps: usize,
    pub n_cells: usize,
    pub kind: NoiseKind,
    pub seed: u64,
    pub dt: f64,
    pub cell_measure: Vec<f64>,
}

impl NoiseRealization {
    pub fn slice(&self, step: usize) -> &[f64] {
        &self.increments[step * self.n_cells..(step + 1) * self.n_cells]
    }

    /// Rows `step,cell,value` with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,cell,value")?;
        for k in 0..self.n_steps {
            for (i, v) in self.slice(k).iter().enumerate() {
                writeln!(w, "{k},{i},{v:e}")?;
            }
        }
        Ok(())
    }
}

/// Cells `[x_i - h/2, x_i + h/2]` clipped to the grid interval.
pub fn cells(grid: &Grid) -> Vec<(f64, f64)> {
    let h = grid.spacing();
    let l = grid.half_width;
    grid.points.iter().map(|&x| ((x - 0.5 * h).max(-l), (x + 0.5 * h).min(l))).collect()
}

pub fn sample_white(grid: &Grid, dt: f64, n_steps: usize, seed: u64) -> Result<NoiseRealization> {
    ensure(dt > 0.0 && n_steps >= 1, || format!("need dt > 0 and n_steps >= 1, got {dt}, {n_steps}"))?;
    let cell_measure = grid.weights();
    let m = grid.len();
    let mut increments = Vec::with_capacity(n_steps * m);
    for k in 0..n_steps {
        let z = standard_normals(seed, &[k as u64, 0, 0], m);
        increments.extend(z.iter().zip(&cell_measure).map(|(z, w)| z * (dt / w).sqrt()));
    }
    Ok(NoiseRealization { increments, n_steps, n_cells: m, kind: NoiseKind::White, seed, dt, cell_measure })
}

/// `int_a^b int_c^d |y - z|^(-eta) dz dy` in closed form.
pub fn riesz_pair_integral(a: f64, b: f64, c: f64, d: f64, eta: f64) -> f64 {
    let f = |u: f64| u.abs().powf(2.0 - eta) / ((1.0 - eta) * (2.0 - eta));
    f(b - c) + f(a - d) - f(b - d) - f(a - c)
}

fn validate_eta(eta: f64) -> Result<()> {
    ensure(eta > 0.0 && eta < 1.0, || format!("eta must lie in (0, d) = (0, 1), got {eta}"))
}

/// Cell-pair integrals `I_ij` of the Riesz kernel.
fn riesz_pair_matrix(grid: &Grid, eta: f64) -> DMatrix<f64> {
    let c = cells(grid);
    let m = c.len();
    DMatrix::from_fn(m, m, |i, j| riesz_pair_integral(c[i].0, c[i].1, c[j].0, c[j].1, eta))
}

/// Cell-averaged covariance `C_ij = I_ij / (|cell_i| |cell_j|)`.
pub fn riesz_covariance(grid: &Grid, eta: f64) -> Result<DMatrix<f64>> {
    validate_eta(eta)?;
    let w = grid.weights();
    let mut c = riesz_pair_matrix(grid, eta);
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            c[(i, j)] /= w[i] * w[j];
        }
    }
    Ok(c)
}

/// Symmetric factor `F` with `F F^T = C`. Eigenvalues below `1e-12 max` are
/// clipped to zero; clearly negative ones are an error.
pub fn symmetric_factor(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(c.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min < -1e-8 * max {
        return Err(Error::NumericFailure { method: "covariance factorization (refine the cell averaging)", residual: min });
    }
    let sqrt = eig.eigenvalues.map(|l| if l > 1e-12 * max { l.sqrt() } else { 0.0 });
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose())
}

pub fn sample_colored(grid: &Grid, dt: f64, n_steps: usize, eta: f64, seed: u64) -> Result<NoiseRealization> {
    ensure(dt > 0.0 && n_steps >= 1, || format!("need dt > 0 and n_steps >= 1, got {dt}, {n_steps}"))?;
    let factor = symmetric_factor(&riesz_covariance(grid, eta)?)?;
    let m = grid.len();
    let mut increments = Vec::with_capacity(n_steps * m);
    for k in 0..n_steps {
        let z = DVector::from_vec(standard_normals(seed, &[k as u64, 0, 0], m));
        let x = &factor * z * dt.sqrt();
        increments.extend(x.iter());
    }
    Ok(NoiseRealization {
        increments,
        n_steps,
        n_cells: m,
        kind: NoiseKind::Colored { eta },
        seed,
        dt,
        cell_measure: grid.weights(),
    })
}

/// `int int phi_1(y) phi_1(z) |y - z|^(-eta) dy dz`, with the kernel averaged
/// over cell pairs.
pub fn kappa(basis: &SpectralBasis, eta: f64) -> Result<f64> {
    validate_eta(eta)?;
    let i = riesz_pair_matrix(&basis.grid, eta);
    let p = DVector::from_column_slice(&basis.phi[0]);
    Ok(p.dot(&(&i * &p)))
}

/// Mode-space noise: per step, the vector of `int int phi_n dF` over the step,
/// centered Gaussian with covariance `dt Q`.
///
/// White noise has `Q` equal to the discrete Gram matrix of the basis, which
/// is the identity for the sine modes on a uniform grid. Colored noise has
/// `Q_nm = sum_ij phi_n(x_i) I_ij phi_m(x_j)`.
#[derive(Debug, Clone)]
pub struct ModeNoise {
    pub kind: NoiseKind,
    pub seed: u64,
    pub n_modes: usize,
    /// `F` with `F F^T = Q`; `None` for the identity.
    factor: Option<DMatrix<f64>>,
}

impl ModeNoise {
    pub fn new(basis: &SpectralBasis, kind: NoiseKind, seed: u64) -> Result<Self> {
        let n = basis.n_modes();
        let factor = match kind {
            NoiseKind::White => None,
            NoiseKind::Colored { eta } => Some(symmetric_factor(&Self::colored_covariance(basis, eta)?)?),
        };
        Ok(ModeNoise { kind, seed, n_modes: n, factor })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ModeNoise { seed, ..self.clone() }
    }

    /// `Q` for colored noise.
    pub fn colored_covariance(basis: &SpectralBasis, eta: f64) -> Result<DMatrix<f64>> {
        validate_eta(eta)?;
        let i = riesz_pair_matrix(&basis.grid, eta);
        let n = basis.n_modes();
        let m = basis.grid.len();
        let phi = DMatrix::from_fn(n, m, |r, c| basis.phi[r][c]);
        Ok(&phi * i * phi.transpose())
    }

    /// Mode covariance per unit time.
    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.factor {
            None => DMatrix::identity(self.n_modes, self.n_modes),
            Some(f) => f * f.transpose(),
        }
    }

    fn correlate(&self, z: Vec<f64>, scale: f64) -> Vec<f64> {
        match &self.factor {
            None => z.into_iter().map(|v| v * scale).collect(),
            Some(f) => (f * DVector::from_vec(z) * scale).iter().cloned().collect(),
        }
    }

    /// Increment over base step `step` of length `dt`.
    pub fn increment(&self, step: u64, dt: f64) -> Vec<f64> {
        self.correlate(standard_normals(self.seed, &[step, 0, 0], self.n_modes), dt.sqrt())
    }

    /// Splits the increment `total` over a step of length `dt` into its two
    /// halves, drawn from the Brownian bridge. `(depth, index)` identify the
    /// sub-step within base step `step`.
    pub fn bridge(&self, step: u64, depth: u32, index: u64, dt: f64, total: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z = standard_normals(self.seed, &[step, depth as u64 + 1, index], self.n_modes);
        let dev = self.correlate(z, 0.5 * dt.sqrt());
        let first: Vec<f64> = total.iter().zip(&dev).map(|(t, d)| 0.5 * t + d).collect();
        let second = total.iter().zip(&first).map(|(t, f)| t - f).collect();
        (first, second)
    }
}
