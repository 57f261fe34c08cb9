//! One-dimensional reduction of the equation on the ball: the projection onto
//! the principal eigenfunction, the comparison processes `Z`, `U` and `V`, the
//! kernel `h`, the Gaussian process `xi`, the Feller test and the Girsanov
//! weight.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::blowup::{BlowupDetector, PathStatus, DEFAULT_LADDER};
use crate::drift::DriftSpec;
use crate::error::{ensure, invalid, Result};
use crate::expsum::{phi1, ModeStates, StepTable};
use crate::kernels::SpectralBasis;
use crate::model::{Domain, ModelParams};
use crate::noise::{kappa, standard_normals, NoiseKind};
use crate::quad::{fixed_gk, integrate, Tol};
use crate::solver::{FirstModeTrace, PathField};
use crate::special::{c_beta_lambda, MittagLeffler};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionParams {
    pub lambda1: f64,
    pub c: f64,
    pub kappa: f64,
    pub beta: f64,
    pub drift: DriftSpec,
    pub y0: f64,
}

impl ReductionParams {
    pub fn new(lambda1: f64, c: f64, kappa: f64, beta: f64, drift: DriftSpec, y0: f64) -> Result<Self> {
        let rp = ReductionParams { lambda1, c, kappa, beta, drift, y0 };
        rp.validate()?;
        Ok(rp)
    }

    /// Constants of the equation on the ball: `lambda1 = mu_1`,
    /// `c = c_beta_lambda(beta, mu_1)` and `kappa = <phi_1, Q phi_1>`
    /// (`1` for white noise).
    pub fn from_model(params: &ModelParams, basis: &SpectralBasis, drift: DriftSpec, y0: f64) -> Result<Self> {
        params.validate()?;
        let lambda1 = basis.mu[0];
        let kappa = match NoiseKind::from_eta(params.eta) {
            NoiseKind::White => 1.0,
            NoiseKind::Colored { eta } => kappa(basis, eta)?,
        };
        let c = c_beta_lambda(params.beta, lambda1)?;
        Self::new(lambda1, c, kappa, params.beta, drift, y0)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.lambda1 > 0.0 && self.lambda1.is_finite(), || format!("lambda1 must be positive, got {}", self.lambda1))?;
        ensure(self.c > 0.0 && self.c <= 1.0, || format!("c must lie in (0, 1], got {}", self.c))?;
        ensure(self.kappa > 0.0 && self.kappa.is_finite(), || format!("kappa must be positive, got {}", self.kappa))?;
        ensure(self.beta > 0.0 && self.beta <= 1.0, || format!("beta must lie in (0, 1], got {}", self.beta))?;
        ensure(self.y0 >= 0.0 && self.y0.is_finite(), || format!("Y0 must be nonnegative, got {}", self.y0))?;
        self.drift.validate()
    }

    /// Drift of `V`: `-lambda1 x + c b(x)`.
    pub fn mean_drift(&self, x: f64) -> f64 {
        -self.lambda1 * x + self.c * self.drift.eval(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub status: PathStatus,
    /// Running maximum of the path up to the stopping time.
    pub sup: f64,
    /// Value at the stopping time, `+inf` after blowup.
    pub terminal: f64,
}

impl ScalarPath {
    fn from_series(times: Vec<f64>, values: Vec<f64>) -> Self {
        let sup = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let terminal = values.last().copied().unwrap_or(f64::NAN);
        ScalarPath { times, values, status: PathStatus::HorizonReached, sup, terminal }
    }
}

/// `Y_t = sum_i w_i phi_1(x_i) u(t, x_i)` for every recorded time.
pub fn project_phi1(field: &PathField, basis: &SpectralBasis) -> Result<ScalarPath> {
    ensure(matches!(field.params.domain, Domain::Ball), || "projection needs a field on the ball".into())?;
    let m = basis.grid.len();
    ensure(field.x.len() == m, || {
        format!("field recorded at {} points, the basis grid has {m}; record the full grid", field.x.len())
    })?;
    let values = field.values.iter().map(|row| basis.inner(row, &basis.phi[0])).collect();
    let mut path = ScalarPath::from_series(field.times.clone(), values);
    path.status = field.status.clone();
    if path.status.is_blown_up() {
        path.terminal = f64::INFINITY;
    }
    Ok(path)
}

/// `h(t) = lambda1 E_beta(-lambda1 t^beta) - beta lambda1 t^(beta-1) E_beta'(-lambda1 t^beta)`,
/// with `h(0) = 0`.
pub fn h_kernel(beta: f64, lambda1: f64, t: f64) -> Result<f64> {
    ensure(t >= 0.0, || format!("h needs t >= 0, got {t}"))?;
    ensure(lambda1 > 0.0, || format!("lambda1 must be positive, got {lambda1}"))?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let ml = MittagLeffler::new(beta)?;
    h_with(&ml, lambda1, t)
}

fn h_with(ml: &MittagLeffler, lambda1: f64, t: f64) -> Result<f64> {
    let beta = ml.beta();
    let x = lambda1 * t.powf(beta);
    Ok(lambda1 * ml.eval(x)? - beta * lambda1 * t.powf(beta - 1.0) * ml.deriv(x)?)
}

/// `lambda1 E + dE/dt` with the time derivative taken by central differences.
pub fn h_kernel_fd(beta: f64, lambda1: f64, t: f64) -> Result<f64> {
    ensure(t > 0.0, || format!("h_kernel_fd needs t > 0, got {t}"))?;
    let ml = MittagLeffler::new(beta)?;
    let e = |s: f64| ml.eval(lambda1 * s.powf(beta));
    let d = 1e-5 * t;
    Ok(lambda1 * e(t)? + (e(t + d)? - e(t - d)?) / (2.0 * d))
}

/// Step averages `H_j = (1/dt) int_{(j-1)dt}^{j dt} h`, `j = 1..=n`, computed
/// from `int h = lambda1 int E + E(b) - E(a)`.
pub fn h_step_averages(beta: f64, lambda1: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    ensure(dt > 0.0, || format!("dt must be positive, got {dt}"))?;
    let ml = MittagLeffler::new(beta)?;
    let mut e_prev = 1.0;
    let mut out = Vec::with_capacity(n);
    for j in 1..=n {
        let (a, b) = ((j - 1) as f64 * dt, j as f64 * dt);
        let e_b = ml.eval(lambda1 * b.powf(beta))?;
        let int_e = if j == 1 {
            // t^beta substitution removes the endpoint singularity of dE/dt
            let r = integrate(
                |s| {
                    let t = s.powf(1.0 / beta);
                    ml.eval(lambda1 * s).unwrap_or(f64::NAN) * t / (beta * s.max(f64::MIN_POSITIVE))
                },
                0.0,
                b.powf(beta),
                Tol::new(1e-14, 1e-12),
            )?;
            r.value
        } else {
            fixed_gk(|t| ml.eval(lambda1 * t.powf(beta)).unwrap_or(f64::NAN), a, b, 1)
        };
        out.push((lambda1 * int_e + e_b - e_prev) / dt);
        e_prev = e_b;
    }
    ensure(out.iter().all(|v| v.is_finite()), || "non-finite step average of h".into())?;
    Ok(out)
}

/// `int_{lo}^{hi} h^2` on one panel.
fn h2_panel(ml: &MittagLeffler, lambda1: f64, lo: f64, hi: f64) -> Result<f64> {
    // integrate in ln t, where the t^(2 beta - 2) singularity is smooth
    let r = integrate(
        |v| {
            let t = v.exp();
            let h = h_with(ml, lambda1, t).unwrap_or(f64::NAN);
            h * h * t
        },
        lo.ln(),
        hi.ln(),
        Tol::new(0.0, 1e-11),
    )?;
    Ok(r.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Panel {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

/// Dyadic-panel accumulation of `int_0^T h^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Report {
    /// Panels `[T 2^-(k+1), T 2^-k]`, `k = 0, 1, ...`.
    pub panels: Vec<L2Panel>,
    /// Ratios of successive panel sums toward the origin.
    pub ratios: Vec<f64>,
    /// Leading-order contribution of `[0, eps]`, infinite when `beta <= 1/2`.
    pub head: f64,
    pub total: f64,
    pub converged: bool,
    /// Set for `beta <= 1/2`.
    pub outside_hypothesis: bool,
}

impl L2Report {
    /// Sum over the panels only, which stays finite for any `beta`.
    pub fn panel_sum(&self) -> f64 {
        self.panels.iter().map(|p| p.value).sum()
    }
}

/// Accumulates `int_0^T h^2` over `n_panels` dyadic panels. The panels
/// decay geometrically with ratio `2^(1 - 2 beta)` toward the origin exactly
/// when `beta > 1/2`; otherwise they grow and the report is flagged.
pub fn h_l2(beta: f64, lambda1: f64, t_end: f64, n_panels: usize) -> Result<L2Report> {
    ensure(t_end > 0.0, || format!("T must be positive, got {t_end}"))?;
    ensure(n_panels >= 4, || "need at least four panels".into())?;
    let ml = MittagLeffler::new(beta)?;
    let mut panels = Vec::with_capacity(n_panels);
    let mut hi = t_end;
    for _ in 0..n_panels {
        let lo = 0.5 * hi;
        panels.push(L2Panel { lo, hi, value: h2_panel(&ml, lambda1, lo, hi)? });
        hi = lo;
    }
    let ratios: Vec<f64> = panels.windows(2).map(|w| w[1].value / w[0].value).collect();
    let outside_hypothesis = beta <= 0.5;
    let eps = panels.last().expect("nonempty").lo;
    let head = if beta >= 1.0 {
        0.0
    } else if outside_hypothesis {
        f64::INFINITY
    } else {
        // h ~ -lambda1 t^(beta-1) / Gamma(beta) near the origin
        lambda1 * lambda1 * eps.powf(2.0 * beta - 1.0) / ((2.0 * beta - 1.0) * gamma(beta).powi(2))
    };
    let tail = &ratios[ratios.len() - 3..];
    let converged = beta >= 1.0 || (!outside_hypothesis && tail.iter().all(|r| *r < 0.99));
    let sum: f64 = panels.iter().map(|p| p.value).sum();
    Ok(L2Report { panels, ratios, head, total: sum + head, converged, outside_hypothesis })
}

/// `A_T = int_0^T h^2`. Errors for `beta <= 1/2`, where the integral diverges.
pub fn h_l2_norm(beta: f64, lambda1: f64, t_end: f64) -> Result<f64> {
    let r = h_l2(beta, lambda1, t_end, 40)?;
    if r.outside_hypothesis {
        return invalid(format!("int h^2 diverges for beta = {beta} <= 1/2 (outside theorem hypothesis)"));
    }
    Ok(r.total)
}

/// Brownian increments over `n` steps of length `dt`.
pub fn brownian_increments(seed: u64, n: usize, dt: f64) -> Vec<f64> {
    let s = dt.sqrt();
    standard_normals(seed, &[0, 0, 0], n).into_iter().map(|z| z * s).collect()
}

/// `xi_k = sum_{m < k} H_{k-m} dB_m` for `k = 0..=n`, a predictable
/// discretisation of `int_0^t h(t - s) dB_s`.
pub fn xi_path(h_avg: &[f64], increments: &[f64]) -> Result<Vec<f64>> {
    let n = increments.len();
    ensure(h_avg.len() >= n, || format!("need {n} step averages of h, got {}", h_avg.len()))?;
    let mut xi = vec![0.0; n + 1];
    for (k, x) in xi.iter_mut().enumerate().skip(1) {
        *x = (0..k).map(|m| h_avg[k - 1 - m] * increments[m]).sum();
    }
    Ok(xi)
}

/// Euler-Maruyama settings for the scalar processes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarSettings {
    pub dt: f64,
    pub horizon: f64,
    pub ladder: Vec<f64>,
    pub dt_floor: f64,
    pub drift_rate_limit: f64,
    pub growth_limit: f64,
    /// Seed for the Brownian-bridge refinement of halved steps.
    pub seed: u64,
    /// Record every `k`-th base step; `0` keeps the endpoints only.
    pub record_every: usize,
}

impl ScalarSettings {
    pub fn new(dt: f64, horizon: f64, seed: u64) -> Self {
        ScalarSettings {
            dt,
            horizon,
            ladder: DEFAULT_LADDER.to_vec(),
            dt_floor: 1e-9,
            drift_rate_limit: 0.1,
            growth_limit: 10.0,
            seed,
            record_every: 1,
        }
    }

    pub fn with_record(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        ensure(self.dt > 0.0 && self.horizon > 0.0, || "dt and horizon must be positive".into())?;
        ensure(self.dt_floor > 0.0 && self.dt_floor <= self.dt, || "dt_floor must lie in (0, dt]".into())?;
        ensure(self.drift_rate_limit > 0.0 && self.growth_limit > 1.0, || "invalid step control limits".into())
    }
}

struct Scalar<'a> {
    rp: &'a ReductionParams,
    settings: &'a ScalarSettings,
    sqrt_kappa: f64,
    max_depth: u32,
    x: f64,
    t: f64,
    step: u64,
    sup: f64,
    detector: BlowupDetector,
    status: PathStatus,
}

impl Scalar<'_> {
    fn advance(&mut self, dt: f64, depth: u32, index: u64, db: f64, xi: f64) {
        if !matches!(self.status, PathStatus::Alive) {
            return;
        }
        let drifting = !self.rp.drift.is_zero();
        let can_halve = drifting && depth < self.max_depth;
        let rate = self.rp.c * self.rp.drift.eval(self.x) / self.x.abs().max(1.0);
        if can_halve && dt * rate > self.settings.drift_rate_limit {
            return self.split(dt, depth, index, db, xi);
        }
        let next = self.x + (self.rp.mean_drift(self.x) + self.sqrt_kappa * xi) * dt + self.sqrt_kappa * db;
        if !(next.abs() <= self.settings.growth_limit * self.x.abs().max(1.0)) && drifting {
            if can_halve {
                return self.split(dt, depth, index, db, xi);
            }
            self.status = PathStatus::Unresolved { reason: format!("step-size underflow at t = {}", self.t) };
            return;
        }
        self.x = next;
        self.t += dt;
        self.sup = self.sup.max(next);
        if drifting {
            if let Some(st) = self.detector.observe(self.t, next.abs()) {
                self.status = st;
            }
        }
    }

    fn split(&mut self, dt: f64, depth: u32, index: u64, db: f64, xi: f64) {
        let z = standard_normals(self.settings.seed, &[self.step, depth as u64 + 1, index], 1)[0];
        let first = 0.5 * db + 0.5 * dt.sqrt() * z;
        self.advance(0.5 * dt, depth + 1, 2 * index, first, xi);
        self.advance(0.5 * dt, depth + 1, 2 * index + 1, db - first, xi);
    }
}

fn simulate_scalar(rp: &ReductionParams, xi: Option<&[f64]>, increments: &[f64], settings: &ScalarSettings) -> Result<ScalarPath> {
    rp.validate()?;
    settings.validate()?;
    let n = settings.n_steps();
    ensure(increments.len() >= n, || format!("need {n} Brownian increments, got {}", increments.len()))?;
    if let Some(xi) = xi {
        ensure(xi.len() >= n, || format!("need {n} values of xi, got {}", xi.len()))?;
    }
    if !rp.drift.is_zero() {
        rp.drift.validate_for_solver()?;
    }
    let detector = BlowupDetector::new(&settings.ladder, &rp.drift, rp.c)?;
    if !rp.drift.is_zero() {
        detector.check_resolvable(settings.horizon)?;
    }
    let floor = settings.dt_floor.min(detector.resolution_floor());
    let max_depth = if rp.drift.is_zero() { 0 } else { (settings.dt / floor).log2().ceil().max(0.0) as u32 };
    let mut s = Scalar {
        rp,
        settings,
        sqrt_kappa: rp.kappa.sqrt(),
        max_depth,
        x: 0.0,
        t: 0.0,
        step: 0,
        sup: 0.0,
        detector,
        status: PathStatus::Alive,
    };
    let mut times = vec![0.0];
    let mut values = vec![0.0];
    for k in 0..n {
        s.step = k as u64;
        s.advance(settings.dt, 0, 0, increments[k], xi.map_or(0.0, |x| x[k]));
        let alive = matches!(s.status, PathStatus::Alive);
        if alive {
            s.t = (k + 1) as f64 * settings.dt;
        }
        let every = settings.record_every;
        if !alive || k + 1 == n || (every > 0 && (k + 1) % every == 0) {
            times.push(s.t);
            values.push(s.x);
        }
        if !alive {
            break;
        }
    }
    let status = if matches!(s.status, PathStatus::Alive) { PathStatus::HorizonReached } else { s.status };
    let terminal = if status.is_blown_up() { f64::INFINITY } else { s.x };
    let sup = if status.is_blown_up() { f64::INFINITY } else { s.sup };
    Ok(ScalarPath { times, values, status, sup, terminal })
}

/// `dU = (-lambda1 U + c b(U) + sqrt(kappa) xi) dt + sqrt(kappa) dB`, `U_0 = 0`.
/// `xi[k]` is held over base step `k`.
pub fn simulate_u(rp: &ReductionParams, xi: &[f64], increments: &[f64], settings: &ScalarSettings) -> Result<ScalarPath> {
    simulate_scalar(rp, Some(xi), increments, settings)
}

/// `dV = (-lambda1 V + c b(V)) dt + sqrt(kappa) dB`, `V_0 = 0`.
pub fn simulate_v(rp: &ReductionParams, increments: &[f64], settings: &ScalarSettings) -> Result<ScalarPath> {
    simulate_scalar(rp, None, increments, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FellerVerdict {
    ExplodesAs,
    NoExplosion,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerReport {
    pub verdict: FellerVerdict,
    /// Integral of `F(x) = p'(x) int_0^x dy / (kappa p'(y))` over `[0, 1]`
    /// and then over `[2^k, 2^(k+1)]`.
    pub panel_sums: Vec<f64>,
    /// Cutoff at which the verdict was reached.
    pub cutoff: f64,
    pub note: String,
}

/// Upper cutoffs `2^10, 2^20, 2^30, 2^40`.
pub const FELLER_CUTOFF_EXPONENTS: [usize; 4] = [10, 20, 30, 40];
const FELLER_SUBSTEPS: usize = 512;

/// Feller test for explosion of `V` to `+inf`, started at `0`.
///
/// `F` solves `F' = 1/kappa - (2 mu / kappa) F`, `F(0) = 0`, which is integrated
/// with a frozen-coefficient exponential step. The test integral converges,
/// and `V` explodes almost surely, when the dyadic panel sums decay
/// geometrically. The drift is `-lambda1 x` for `x < 0`, so `-inf` is never
/// reached.
pub fn feller_explosion_test(rp: &ReductionParams) -> Result<FellerReport> {
    rp.validate()?;
    let k = rp.kappa;
    let mut f = 0.0;
    let mut sums = Vec::new();
    let mut x = 0.0;
    let mut last_check = 0;
    let last_panel = *FELLER_CUTOFF_EXPONENTS.last().expect("ladder") as i32;
    for panel in 0..=last_panel {
        let (lo, hi) = if panel == 0 { (0.0, 1.0) } else { (2f64.powi(panel - 1), 2f64.powi(panel)) };
        let h = (hi - lo) / FELLER_SUBSTEPS as f64;
        let mut acc = 0.0;
        for _ in 0..FELLER_SUBSTEPS {
            let a = 2.0 * rp.mean_drift(x + 0.5 * h) / k;
            let e = (-a * h).exp();
            let next = f * e + h * phi1(a * h) / k;
            acc += 0.5 * h * (f + next);
            f = next;
            x += h;
        }
        if !(acc.is_finite() && f.is_finite() && f < 1e300) {
            return Ok(FellerReport {
                verdict: FellerVerdict::NoExplosion,
                panel_sums: sums,
                cutoff: hi,
                note: "scale integrand overflows: the test integral diverges".into(),
            });
        }
        sums.push(acc);
        let p = panel as usize;
        if FELLER_CUTOFF_EXPONENTS.contains(&p) {
            last_check = p;
            let tail = &sums[sums.len() - 5..];
            let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
            let verdict = if ratios.iter().all(|r| *r < 0.9) {
                Some(FellerVerdict::ExplodesAs)
            } else if ratios.iter().all(|r| *r >= 0.99) {
                Some(FellerVerdict::NoExplosion)
            } else {
                None
            };
            if let Some(verdict) = verdict {
                return Ok(FellerReport {
                    verdict,
                    panel_sums: sums,
                    cutoff: hi,
                    note: format!("last panel ratios {ratios:?}"),
                });
            }
        }
    }
    Ok(FellerReport {
        verdict: FellerVerdict::Inconclusive,
        panel_sums: sums,
        cutoff: 2f64.powi(last_check as i32),
        note: "no decisive panel trend by the largest cutoff".into(),
    })
}

/// `log R_T = -sum xi_k dB_k - 1/2 sum xi_k^2 dt`.
pub fn girsanov_log_weight(xi: &[f64], increments: &[f64], dt: f64) -> Result<f64> {
    ensure(xi.len() >= increments.len(), || "xi shorter than the increments".into())?;
    Ok(increments.iter().zip(xi).map(|(db, x)| -x * db - 0.5 * x * x * dt).sum())
}

pub fn girsanov_weight(xi: &[f64], increments: &[f64], dt: f64) -> Result<f64> {
    girsanov_log_weight(xi, increments, dt).map(f64::exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
}

pub fn mean_se(xs: impl IntoIterator<Item = f64>) -> MeanEstimate {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { f64::NAN };
    MeanEstimate { mean, se: (var / n).sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub weight: MeanEstimate,
    pub entropy: MeanEstimate,
    /// `(exp(2 A_T T) - 1) / 2`.
    pub bound: f64,
    pub martingale_ok: bool,
    pub entropy_ok: bool,
}

/// Checks `E[R] = 1` and `E[R log R] <= (exp(2 A_T T) - 1)/2`, each within
/// three standard errors.
pub fn entropy_check(log_weights: &[f64], a_t: f64, t_end: f64) -> Result<EntropyReport> {
    ensure(log_weights.len() >= 2, || "need at least two weights".into())?;
    let weight = mean_se(log_weights.iter().map(|l| l.exp()));
    let entropy = mean_se(log_weights.iter().map(|l| l.exp() * l));
    let bound = 0.5 * (2.0 * a_t * t_end).exp_m1();
    Ok(EntropyReport {
        weight,
        entropy,
        bound,
        martingale_ok: (weight.mean - 1.0).abs() < 3.0 * weight.se,
        entropy_ok: entropy.mean <= bound + 3.0 * entropy.se,
    })
}

/// Bounded path functionals. Blown-up paths have `sup = terminal = +inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Functional {
    /// `1{sup_t X_t >= level}`
    SupAbove { level: f64 },
    /// `1 / (1 + exp(-(X_T - center) / scale))`
    Sigmoid { center: f64, scale: f64 },
    /// `1{X_T > level}`
    TerminalAbove { level: f64 },
    /// `cos(freq X_T)`, taken as `0` after blowup
    Cos { freq: f64 },
    /// `exp(-X_T^2 / width^2)`
    Gaussian { width: f64 },
}

impl Functional {
    pub fn eval(&self, p: &ScalarPath) -> f64 {
        let x = p.terminal;
        match *self {
            Functional::SupAbove { level } => (p.sup >= level) as u8 as f64,
            Functional::Sigmoid { center, scale } => {
                if x == f64::INFINITY {
                    1.0
                } else {
                    1.0 / (1.0 + (-(x - center) / scale).exp())
                }
            }
            Functional::TerminalAbove { level } => (x > level) as u8 as f64,
            Functional::Cos { freq } => {
                if x.is_finite() {
                    (freq * x).cos()
                } else {
                    0.0
                }
            }
            Functional::Gaussian { width } => {
                if x.is_finite() {
                    (-(x / width).powi(2)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Functional::SupAbove { level } => format!("sup >= {level}"),
            Functional::Sigmoid { center, scale } => format!("sigmoid((X_T - {center}) / {scale})"),
            Functional::TerminalAbove { level } => format!("X_T > {level}"),
            Functional::Cos { freq } => format!("cos({freq} X_T)"),
            Functional::Gaussian { width } => format!("exp(-(X_T / {width})^2)"),
        }
    }

    /// The panel used for the Girsanov law check.
    pub fn standard_panel() -> Vec<Functional> {
        vec![
            Functional::SupAbove { level: 0.5 },
            Functional::Sigmoid { center: 0.0, scale: 0.5 },
            Functional::TerminalAbove { level: 0.0 },
            Functional::Cos { freq: 1.0 },
            Functional::Gaussian { width: 1.0 },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawRow {
    pub functional: String,
    /// `E[R f(U)]`
    pub weighted: MeanEstimate,
    /// `E[f(V)]`
    pub plain: MeanEstimate,
    pub z: f64,
    /// Weighted estimator with effective sample size below a tenth of the
    /// ensemble.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub rows: Vec<LawRow>,
    pub effective_sample_size: f64,
    pub max_abs_z: f64,
}

/// Compares `E[R f(U)]` with `E[f(V)]` over independent ensembles.
pub fn weighted_law_check(u: &[ScalarPath], v: &[ScalarPath], weights: &[f64], functionals: &[Functional]) -> Result<LawReport> {
    ensure(u.len() == weights.len(), || "one weight per U path".into())?;
    ensure(u.len() >= 2 && v.len() >= 2, || "need at least two paths in each ensemble".into())?;
    ensure(weights.iter().all(|w| *w >= 0.0 && w.is_finite()), || "weights must be finite and nonnegative".into())?;
    let s1: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    let ess = s1 * s1 / s2;
    let flagged = ess < 0.1 * u.len() as f64;
    let rows: Vec<LawRow> = functionals
        .iter()
        .map(|f| {
            let weighted = mean_se(u.iter().zip(weights).map(|(p, w)| w * f.eval(p)));
            let plain = mean_se(v.iter().map(|p| f.eval(p)));
            let se = (weighted.se.powi(2) + plain.se.powi(2)).sqrt();
            let z = if se > 0.0 { (weighted.mean - plain.mean) / se } else { 0.0 };
            LawRow { functional: f.describe(), weighted, plain, z, flagged }
        })
        .collect();
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    Ok(LawReport { rows, effective_sample_size: ess, max_abs_z })
}

/// `Y_k` and the comparison process `Z_k` on the steps of a solver trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// `min_k (Y_k - Z_k) / max(1, |Y_k|)`
    pub min_margin: f64,
    pub holds: bool,
}

/// Builds the discrete comparison process from the first-mode trace of a
/// ball solve.
///
/// `Y = a_1 / S` with `S = sum_i w_i phi_1(x_i)` is the average of `u` against
/// the probability weights `w phi_1 / S`. `Z = E Y_0 + N + X`, where `E Y_0`
/// and `N` reuse the relaxation tables of `Y` on the initial value and on the
/// noise, and `X` solves `X' = -lambda1 X + c b(X + N)` exactly for frozen
/// `b`. Jensen against the probability weights and the bound
/// `E_beta(-lambda1 t^beta) >= c exp(-lambda1 t)` give `Y >= Z` step by step
/// when `b` is convex and nondecreasing.
pub fn comparison_process(
    trace: &FirstModeTrace,
    basis: &SpectralBasis,
    beta: f64,
    drift: &DriftSpec,
    tol: f64,
) -> Result<ComparisonReport> {
    let flags = drift.flags();
    ensure(flags.convex && flags.nondecreasing, || format!("comparison needs a convex nondecreasing drift, got {}", drift.describe()))?;
    let s: f64 = basis.phi[0].iter().zip(&basis.weights).map(|(p, w)| p * w).sum();
    let lambda = basis.mu[0];
    let c = c_beta_lambda(beta, lambda)?;
    let y0 = trace.a1_initial / s;
    let mut relax = ModeStates::new(&trace.sum, y0);
    let mut noise = ModeStates::zeros(trace.sum.len());
    let mut tables: Vec<(f64, StepTable)> = Vec::new();
    let (mut x, mut n_val) = (0.0, 0.0);
    let mut report = ComparisonReport { times: vec![0.0], y: vec![y0], z: vec![y0], min_margin: 0.0, holds: true };
    for st in &trace.steps {
        let idx = match tables.iter().position(|(dt, _)| *dt == st.dt) {
            Some(i) => i,
            None => {
                tables.push((st.dt, StepTable::new(&trace.sum, trace.k, st.dt)));
                tables.len() - 1
            }
        };
        let table = &tables[idx].1;
        let b = drift.eval(x + n_val);
        let e = (-lambda * st.dt).exp();
        x = e * x + c * b * st.dt * phi1(lambda * st.dt);
        n_val = noise.advance(table, st.noise / s);
        let e_part = relax.advance(table, 0.0);
        let y = st.a1 / s;
        let z = e_part + n_val + x;
        report.times.push(st.t);
        report.y.push(y);
        report.z.push(z);
        let margin = (y - z) / y.abs().max(1.0);
        report.min_margin = report.min_margin.min(margin);
    }
    report.holds = report.min_margin >= -tol;
    Ok(report)
}
