//! Globally adaptive Gauss-Kronrod (G10/K21) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7, 9.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// Tolerances for [`integrate`]. Convergence when `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tol {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel, max_intervals: 4000 }
    }

    pub const fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

impl Default for Tol {
    fn default() -> Self {
        Tol::new(1e-12, 1e-10)
    }
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for (i, (&x, &w)) in XGK[..10].iter().zip(WGK[..10].iter()).enumerate() {
        let dx = h * x;
        let s = f(c - dx) + f(c + dx);
        kron += w * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    Panel { a, b, value, error }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], tol)
}

/// Integrates `f` over `[pts[0], pts.last()]`, starting from the given panel breakpoints.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    pts: &[f64],
    tol: Tol,
) -> Result<QuadResult> {
    if pts.len() < 2 {
        return Err(Error::InvalidInput("quadrature needs at least two breakpoints".into()));
    }
    let mut panels: Vec<Panel> = pts
        .windows(2)
        .filter(|w| w[1] != w[0])
        .map(|w| gk21(&mut f, w[0], w[1]))
        .collect();
    let mut evals = 21 * panels.len();
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NumericFailure { method: "gauss-kronrod", residual: f64::NAN });
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(QuadResult { value, error, evals });
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::NumericFailure { method: "gauss-kronrod", residual: error });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval can no longer be split in floating point
            return Err(Error::NumericFailure { method: "gauss-kronrod", residual: error });
        }
        panels.push(gk21(&mut f, p.a, mid));
        panels.push(gk21(&mut f, mid, p.b));
        evals += 42;
    }
}

/// Composite fixed-order rule on `n` equal panels; no error control.
pub fn fixed_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| gk21(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h).value).sum()
}

/// Log-spaced points `lo * (hi/lo)^(k/(n-1))`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n).map(|k| (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Nodes and weights of the Kronrod rules on the panels chosen by an adaptive
/// run of `f` over `[a, b]`, so that later integrals against `f` reuse them.
pub fn adaptive_nodes<F: FnMut(f64) -> f64>(
    mut f: F,
    pts: &[f64],
    tol: Tol,
) -> Result<Vec<(f64, f64)>> {
    let mut panels: Vec<Panel> =
        pts.windows(2).filter(|w| w[1] != w[0]).map(|w| gk21(&mut f, w[0], w[1])).collect();
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !error.is_finite() {
            return Err(Error::NumericFailure { method: "gauss-kronrod", residual: f64::NAN });
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            break;
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::NumericFailure { method: "gauss-kronrod", residual: error });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk21(&mut f, p.a, mid));
        panels.push(gk21(&mut f, mid, p.b));
    }
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut out = Vec::with_capacity(21 * panels.len());
    for p in &panels {
        let c = 0.5 * (p.a + p.b);
        let h = 0.5 * (p.b - p.a);
        for (&x, &w) in XGK[..10].iter().zip(WGK[..10].iter()) {
            out.push((c - h * x, h * w));
            out.push((c + h * x, h * w));
        }
        out.push((c, h * WGK[10]));
    }
    Ok(out)
}
