//! Mild-solution time stepping in the Dirichlet eigenbasis.
//!
//! Mode `n` relaxes like `E_beta(-mu_n t^beta)`. The relaxation is carried by
//! the Markov states of an exponential-sum representation ([`crate::expsum`]),
//! so each step costs a fixed amount of work regardless of the history length.
//! Per step the drift is frozen at its value at the start of the step and
//! projected onto the modes; the noise enters as the mode increment of the
//! step, spread uniformly across it.

use serde::{Deserialize, Serialize};

use crate::blowup::{BlowupDetector, PathStatus, RungCrossing, DEFAULT_LADDER};
use crate::drift::DriftSpec;
use crate::error::{ensure, invalid, Result};
use crate::expsum::{ExpSum, ModeStates, StepTable};
use crate::kernels::{free_mass_outside, SpectralBasis};
use crate::model::{Domain, ModelParams};
use crate::noise::ModeNoise;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<f64>,
    /// Smallest step reachable by halving, lowered further when the drift
    /// crosses the rung ladder faster than `1e3` steps per rung.
    #[serde(default = "default_floor")]
    pub dt_floor: f64,
    /// A step multiplying the sup-norm by more than this is redone at half size.
    #[serde(default = "default_growth")]
    pub growth_limit: f64,
    /// Steps are halved until `dt max b(u) / max(sup |u|, 1)` is below this.
    #[serde(default = "default_rate")]
    pub drift_rate_limit: f64,
    /// Accuracy of the exponential-sum memory.
    #[serde(default = "default_memory_tol")]
    pub memory_tol: f64,
    /// Record the field every this many base steps (0: first and last only).
    #[serde(default)]
    pub record_every: usize,
    /// Record only grid points with `|x| <= radius`.
    #[serde(default)]
    pub record_radius: Option<f64>,
    /// Radius of the ball whose infimum is tracked.
    #[serde(default = "default_window")]
    pub window_radius: f64,
    /// Keep the first-mode forcing of every step.
    #[serde(default)]
    pub trace_first_mode: bool,
}

fn default_ladder() -> Vec<f64> {
    DEFAULT_LADDER.to_vec()
}
fn default_floor() -> f64 {
    1e-9
}
fn default_growth() -> f64 {
    10.0
}
fn default_rate() -> f64 {
    0.1
}
fn default_memory_tol() -> f64 {
    1e-9
}
fn default_window() -> f64 {
    1.0
}

impl SolverSettings {
    pub fn new(dt: f64, horizon: f64) -> Self {
        SolverSettings {
            dt,
            horizon,
            ladder: default_ladder(),
            dt_floor: default_floor(),
            growth_limit: default_growth(),
            drift_rate_limit: default_rate(),
            memory_tol: default_memory_tol(),
            record_every: 0,
            record_radius: None,
            window_radius: default_window(),
            trace_first_mode: false,
        }
    }

    pub fn with_record(mut self, every: usize, radius: Option<f64>) -> Self {
        self.record_every = every;
        self.record_radius = radius;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace_first_mode = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.dt > 0.0 && self.horizon > 0.0, || {
            format!("need dt > 0 and horizon > 0, got dt = {}, horizon = {}", self.dt, self.horizon)
        })?;
        ensure(self.dt_floor > 0.0 && self.dt_floor <= self.dt, || "dt_floor must lie in (0, dt]".into())?;
        ensure(self.growth_limit > 1.0, || "growth_limit must exceed 1".into())?;
        ensure(self.drift_rate_limit > 0.0, || "drift_rate_limit must be positive".into())?;
        ensure(self.memory_tol > 0.0 && self.memory_tol < 1e-3, || "memory_tol must lie in (0, 1e-3)".into())
    }

    fn n_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil() as usize
    }
}

/// One accepted step of the first mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// End of the step.
    pub t: f64,
    pub dt: f64,
    pub depth: u32,
    /// Projected drift `<b(u), phi_1>` at the start of the step.
    pub drift: f64,
    /// First-mode noise increment, including `sigma`.
    pub noise: f64,
    /// First-mode coefficient at the end of the step.
    pub a1: f64,
}

#[derive(Debug, Clone)]
pub struct FirstModeTrace {
    pub sum: ExpSum,
    /// Rate scale `mu_1^(1/beta)`.
    pub k: f64,
    pub a1_initial: f64,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone)]
pub struct PathField {
    pub times: Vec<f64>,
    /// Recorded grid points.
    pub x: Vec<f64>,
    /// `values[r][j]` at `times[r]`, `x[j]`.
    pub values: Vec<Vec<f64>>,
    pub sup_norm: Vec<f64>,
    /// Infimum over the grid points in `|x| <= window_radius`.
    pub window_inf: Vec<f64>,
    pub status: PathStatus,
    pub crossings: Vec<RungCrossing>,
    pub params: ModelParams,
    pub drift: DriftSpec,
    pub seed: u64,
    /// Mode coefficients at the last accepted step.
    pub coeffs: Vec<f64>,
    pub accepted_steps: usize,
    pub min_dt: f64,
    /// Free-kernel mass escaping `[-L, L]` by the horizon (whole-space runs).
    pub boundary_mass: Option<f64>,
    pub boundary_warning: bool,
    pub trace: Option<FirstModeTrace>,
}

/// Receives the field at the observation points after every base step.
pub trait Observer {
    fn observe(&mut self, t: f64, values: &[f64]);
}

impl<F: FnMut(f64, &[f64])> Observer for F {
    fn observe(&mut self, t: f64, values: &[f64]) {
        self(t, values)
    }
}

struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: f64, _: &[f64]) {}
}

/// Threshold above which boundary influence is reported.
pub const BOUNDARY_TOL: f64 = 1e-4;

pub struct Solver<'a> {
    params: ModelParams,
    drift: DriftSpec,
    basis: &'a SpectralBasis,
    noise: &'a ModeNoise,
    settings: SolverSettings,
    sums: Vec<ExpSum>,
    k: Vec<f64>,
    tables: Vec<Option<Vec<StepTable>>>,
    modes: Vec<ModeStates>,
    coeffs: Vec<f64>,
    u: Vec<f64>,
    sup: f64,
    t: f64,
    step: usize,
    detector: BlowupDetector,
    status: PathStatus,
    min_dt: f64,
    accepted: usize,
    record_idx: Vec<usize>,
    window_idx: Vec<usize>,
    observe_phi: Vec<Vec<f64>>,
    observe_buf: Vec<f64>,
    field: PathField,
}

impl<'a> Solver<'a> {
    /// Prepares a path from initial grid values `u0`.
    pub fn new(
        params: &ModelParams,
        drift: &DriftSpec,
        u0: &[f64],
        basis: &'a SpectralBasis,
        noise: &'a ModeNoise,
        settings: &SolverSettings,
    ) -> Result<Self> {
        params.validate()?;
        settings.validate()?;
        drift.validate_for_solver()?;
        ensure(u0.len() == basis.grid.len(), || {
            format!("initial data has {} values, grid has {}", u0.len(), basis.grid.len())
        })?;
        ensure(u0.iter().all(|v| v.is_finite() && *v >= 0.0), || "initial data must be finite and nonnegative".into())?;
        ensure(noise.n_modes == basis.n_modes(), || "noise and basis mode counts differ".into())?;
        ensure((basis.half_width - params.domain.half_width()).abs() <= 1e-12 * basis.half_width, || {
            "basis does not match the domain".into()
        })?;
        let detector = BlowupDetector::new(&settings.ladder, drift, 1.0)?;
        if !drift.is_zero() {
            detector.check_resolvable(settings.horizon)?;
        }
        let floor = settings.dt_floor.min(detector.resolution_floor());
        let max_depth = if drift.is_zero() { 0 } else { (settings.dt / floor).log2().ceil().max(0.0) as i32 };
        let dt_min = settings.dt * 0.5f64.powi(max_depth);
        let beta = params.beta;
        let k: Vec<f64> = basis.mu.iter().map(|m| m.powf(1.0 / beta)).collect();
        let sums = k
            .iter()
            .map(|&kn| ExpSum::new(beta, kn * dt_min, kn * settings.horizon.max(settings.dt), settings.memory_tol))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = basis.project(u0);
        let modes = sums.iter().zip(&coeffs).map(|(s, a)| ModeStates::new(s, *a)).collect();
        let u = basis.synthesize(&coeffs);
        let sup = sup_abs(&u);
        let grid = &basis.grid;
        let record_idx = match settings.record_radius {
            Some(r) => grid.window(r),
            None => (0..grid.len()).collect(),
        };
        let window_idx = grid.window(settings.window_radius);
        let trace = settings.trace_first_mode.then(|| FirstModeTrace {
            sum: sums[0].clone(),
            k: k[0],
            a1_initial: coeffs[0],
            steps: Vec::new(),
        });
        let field = PathField {
            times: Vec::new(),
            x: record_idx.iter().map(|&j| grid.points[j]).collect(),
            values: Vec::new(),
            sup_norm: Vec::new(),
            window_inf: Vec::new(),
            status: PathStatus::Alive,
            crossings: Vec::new(),
            params: *params,
            drift: drift.clone(),
            seed: noise.seed,
            coeffs: Vec::new(),
            accepted_steps: 0,
            min_dt: settings.dt,
            boundary_mass: None,
            boundary_warning: false,
            trace,
        };
        let mut s = Solver {
            params: *params,
            drift: drift.clone(),
            basis,
            noise,
            settings: settings.clone(),
            sums,
            k,
            tables: vec![None; max_depth as usize + 1],
            modes,
            coeffs,
            u,
            sup,
            t: 0.0,
            step: 0,
            detector,
            status: PathStatus::Alive,
            min_dt: settings.dt,
            accepted: 0,
            record_idx,
            window_idx,
            observe_phi: Vec::new(),
            observe_buf: Vec::new(),
            field,
        };
        if let Some(st) = s.detector.observe(0.0, s.sup) {
            s.status = st;
        }
        s.record();
        Ok(s)
    }

    /// Points reported to the observer after every base step.
    pub fn set_observation_points(&mut self, xs: &[f64]) {
        self.observe_phi = (1..=self.basis.n_modes()).map(|n| xs.iter().map(|&x| self.basis.phi_at(n, x)).collect()).collect();
        self.observe_buf = vec![0.0; xs.len()];
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn status(&self) -> &PathStatus {
        &self.status
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn mode_sum(&self, n: usize) -> (&ExpSum, f64) {
        (&self.sums[n], self.k[n])
    }

    fn ensure_table(&mut self, depth: u32) {
        let d = depth as usize;
        if self.tables[d].is_none() {
            let dt = self.settings.dt * 0.5f64.powi(depth as i32);
            self.tables[d] = Some(self.sums.iter().zip(&self.k).map(|(s, &k)| StepTable::new(s, k, dt)).collect());
        }
    }

    fn drift_projection(&self) -> Vec<f64> {
        let b: Vec<f64> = self.u.iter().zip(&self.basis.weights).map(|(u, w)| w * self.drift.eval(*u)).collect();
        self.basis.phi.iter().map(|p| p.iter().zip(&b).map(|(x, y)| x * y).sum()).collect()
    }

    fn drift_rate(&self) -> f64 {
        let bmax = self.u.iter().map(|&u| self.drift.eval(u)).fold(0.0, f64::max);
        bmax / self.sup.max(1.0)
    }

    /// One leaf step without any checks.
    fn raw_step(&mut self, dt: f64, depth: u32, inc: &[f64]) {
        let proj = if self.drift.is_zero() { None } else { Some(self.drift_projection()) };
        let sigma = self.params.sigma;
        let trace_info = proj.as_ref().map_or(0.0, |p| p[0]);
        self.ensure_table(depth);
        let tables = self.tables[depth as usize].as_ref().expect("built");
        for (n, (m, c)) in self.modes.iter_mut().zip(self.coeffs.iter_mut()).enumerate() {
            let f = proj.as_ref().map_or(0.0, |p| p[n] * dt) + sigma * inc[n];
            *c = m.advance(&tables[n], f);
        }
        self.t += dt;
        if let Some(tr) = self.field.trace.as_mut() {
            tr.steps.push(TraceStep { t: self.t, dt, depth, drift: trace_info, noise: sigma * inc[0], a1: self.coeffs[0] });
        }
    }

    fn refresh_field(&mut self) {
        if !self.drift.is_zero() {
            self.u = self.basis.synthesize(&self.coeffs);
            self.sup = sup_abs(&self.u);
        }
    }

    /// Advances over `dt` from the current state, halving as needed.
    fn advance(&mut self, dt: f64, depth: u32, index: u64, inc: Vec<f64>) {
        if !matches!(self.status, PathStatus::Alive) {
            return;
        }
        let can_halve = (depth as usize) + 1 < self.tables.len();
        if !self.drift.is_zero() && can_halve && dt * self.drift_rate() > self.settings.drift_rate_limit {
            self.split(dt, depth, index, &inc);
            return;
        }
        let saved = (!self.drift.is_zero() && can_halve).then(|| (self.modes.clone(), self.coeffs.clone(), self.t));
        let trace_len = self.field.trace.as_ref().map(|t| t.steps.len());
        let sup_old = self.sup;
        self.raw_step(dt, depth, &inc);
        self.refresh_field();
        let grew = !(self.sup <= self.settings.growth_limit * sup_old.max(1.0));
        if grew {
            if let Some((modes, coeffs, t)) = saved {
                self.modes = modes;
                self.coeffs = coeffs;
                self.t = t;
                if let (Some(tr), Some(len)) = (self.field.trace.as_mut(), trace_len) {
                    tr.steps.truncate(len);
                }
                self.refresh_field();
                self.split(dt, depth, index, &inc);
                return;
            }
            if !self.drift.is_zero() {
                self.status = PathStatus::Unresolved { reason: format!("step-size underflow at t = {}", self.t) };
                return;
            }
        }
        self.accepted += 1;
        self.min_dt = self.min_dt.min(dt);
        if !self.drift.is_zero() {
            if let Some(st) = self.detector.observe(self.t, self.sup) {
                self.status = st;
            }
        }
    }

    fn split(&mut self, dt: f64, depth: u32, index: u64, inc: &[f64]) {
        let (a, b) = self.noise.bridge(self.step as u64, depth, index, dt, inc);
        self.advance(0.5 * dt, depth + 1, 2 * index, a);
        self.advance(0.5 * dt, depth + 1, 2 * index + 1, b);
    }

    /// Advances by one base step. Returns false once the path has stopped.
    pub fn step(&mut self) -> bool {
        self.step_observed(&mut NoObserver)
    }

    pub fn step_observed(&mut self, observer: &mut dyn Observer) -> bool {
        if !matches!(self.status, PathStatus::Alive) {
            return false;
        }
        let n_steps = self.settings.n_steps();
        if self.step >= n_steps {
            self.status = PathStatus::HorizonReached;
            return false;
        }
        let dt = self.settings.dt;
        let inc = self.noise.increment(self.step as u64, dt);
        self.advance(dt, 0, 0, inc);
        self.step += 1;
        // keep base-step times exact
        if matches!(self.status, PathStatus::Alive) {
            self.t = self.step as f64 * dt;
        }
        if !self.observe_phi.is_empty() {
            for v in self.observe_buf.iter_mut() {
                *v = 0.0;
            }
            for (c, row) in self.coeffs.iter().zip(&self.observe_phi) {
                for (v, p) in self.observe_buf.iter_mut().zip(row) {
                    *v += c * p;
                }
            }
            observer.observe(self.t, &self.observe_buf);
        }
        let every = self.settings.record_every;
        let at_end = self.step >= n_steps || !matches!(self.status, PathStatus::Alive);
        if (every > 0 && self.step.is_multiple_of(every)) || at_end {
            self.record();
        }
        if self.step >= n_steps && matches!(self.status, PathStatus::Alive) {
            self.status = PathStatus::HorizonReached;
        }
        matches!(self.status, PathStatus::Alive)
    }

    fn record(&mut self) {
        if self.drift.is_zero() {
            self.u = self.basis.synthesize(&self.coeffs);
            self.sup = sup_abs(&self.u);
        }
        if self.field.times.last() == Some(&self.t) {
            return;
        }
        self.field.times.push(self.t);
        self.field.values.push(self.record_idx.iter().map(|&j| self.u[j]).collect());
        self.field.sup_norm.push(self.sup);
        let inf = self.window_idx.iter().map(|&j| self.u[j]).fold(f64::INFINITY, f64::min);
        self.field.window_inf.push(inf);
    }

    /// Runs to the horizon (or blowup) and returns the path.
    pub fn run(mut self) -> PathField {
        while self.step() {}
        self.finish()
    }

    pub fn run_observed(mut self, observer: &mut dyn Observer) -> PathField {
        while self.step_observed(observer) {}
        self.finish()
    }

    pub fn finish(mut self) -> PathField {
        self.record();
        if matches!(self.status, PathStatus::Alive) && self.step >= self.settings.n_steps() {
            self.status = PathStatus::HorizonReached;
        }
        let mut f = self.field;
        f.status = self.status;
        f.crossings = self.detector.crossings().to_vec();
        f.coeffs = self.coeffs;
        f.accepted_steps = self.accepted;
        f.min_dt = self.min_dt;
        f
    }
}

fn sup_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
}

/// Path of the equation on the ball.
pub fn solve_ball(
    params: &ModelParams,
    drift: &DriftSpec,
    u0: &[f64],
    basis: &SpectralBasis,
    noise: &ModeNoise,
    settings: &SolverSettings,
) -> Result<PathField> {
    if params.domain != Domain::Ball {
        return invalid("solve_ball needs the ball domain");
    }
    Ok(Solver::new(params, drift, u0, basis, noise, settings)?.run())
}

/// Path of the whole-space equation, approximated on `[-L, L]` with the
/// solution killed outside. The free-kernel mass escaping `[-L, L]` from the
/// edge of the unit ball by the horizon is reported.
pub fn solve_free(
    params: &ModelParams,
    drift: &DriftSpec,
    u0: &[f64],
    basis: &SpectralBasis,
    noise: &ModeNoise,
    settings: &SolverSettings,
) -> Result<PathField> {
    let Domain::TruncatedSpace { half_width } = params.domain else {
        return invalid("solve_free needs a truncated whole-space domain");
    };
    let escape = free_mass_outside(params, settings.horizon, half_width)?;
    let mut f = Solver::new(params, drift, u0, basis, noise, settings)?.run();
    f.boundary_mass = Some(escape);
    f.boundary_warning = escape > BOUNDARY_TOL;
    Ok(f)
}

/// Samples of the stochastic convolution at times `t_grid` (multiples of `dt`,
/// increasing) and points `x_grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionField {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// `values[i][j]` at `t[i]`, `x[j]`.
    pub values: Vec<Vec<f64>>,
}

pub fn stochastic_convolution(
    params: &ModelParams,
    basis: &SpectralBasis,
    noise: &ModeNoise,
    t_grid: &[f64],
    x_grid: &[f64],
    dt: f64,
) -> Result<ConvolutionField> {
    ensure(params.eta.is_none(), || "the stochastic convolution is defined for white noise".into())?;
    ensure(!t_grid.is_empty() && t_grid.windows(2).all(|w| w[1] > w[0]) && t_grid[0] > 0.0, || {
        "t_grid must be positive and increasing".into()
    })?;
    let steps: Vec<usize> = t_grid.iter().map(|t| (t / dt).round() as usize).collect();
    for (t, s) in t_grid.iter().zip(&steps) {
        ensure((*s as f64 * dt - t).abs() <= 1e-9 * t.max(1.0), || format!("time {t} is not a multiple of dt = {dt}"))?;
    }
    let horizon = *t_grid.last().expect("nonempty");
    let p = params.with_sigma(1.0);
    let settings = SolverSettings::new(dt, horizon);
    let zero = vec![0.0; basis.grid.len()];
    let mut solver = Solver::new(&p, &DriftSpec::Zero, &zero, basis, noise, &settings)?;
    solver.set_observation_points(x_grid);
    let mut values = Vec::with_capacity(t_grid.len());
    let mut next = 0;
    while next < steps.len() {
        solver.step_observed(&mut NoObserver);
        while next < steps.len() && solver.step == steps[next] {
            values.push(solver.observe_buf.clone());
            next += 1;
        }
    }
    Ok(ConvolutionField { t: t_grid.to_vec(), x: x_grid.to_vec(), values })
}
