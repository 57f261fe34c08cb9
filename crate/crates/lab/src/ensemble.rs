//! Long white-noise runs of the stochastic convolution `g_beta`, reduced on
//! the fly to the statistics the long-time checks need.

use rayon::prelude::*;

use blowup_core::drift::DriftSpec;
use blowup_core::model::ModelParams;
use blowup_core::noise::{derive_seed, ModeNoise, NoiseKind};
use blowup_core::solver::{Solver, SolverSettings};

use crate::campaign::with_workers;
use crate::config::{basis, LongRunSection};
use crate::error::Result;

/// Stream tag separating long runs from the other ensembles.
pub const LONG_RUN_STREAM: u64 = 3;

/// First unit window start; `e^2 < 8`.
pub const FIRST_WINDOW: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct LongRunLayout {
    pub dt: f64,
    pub t_max: f64,
    /// Observation points: `x0` first, then the window points.
    pub points: Vec<f64>,
    /// Base-step indices of the checkpoints, increasing.
    pub checkpoint_steps: Vec<usize>,
    /// Starts `n` of the windows `[n, n + 2]` for increment suprema.
    pub increment_starts: Vec<f64>,
}

impl LongRunLayout {
    /// Checkpoints at `e^2 2^(k / per_doubling)` plus the listed extra times,
    /// all rounded to base steps.
    pub fn new(s: &LongRunSection, per_doubling: usize, extra: &[f64], increment_starts: &[f64]) -> Self {
        let e2 = std::f64::consts::E.powi(2);
        let mut steps = Vec::new();
        let mut k = 0;
        loop {
            let t = e2 * 2f64.powf(k as f64 / per_doubling.max(1) as f64);
            if t > s.t_max {
                break;
            }
            steps.push((t / s.dt).ceil() as usize);
            k += 1;
        }
        for t in extra {
            steps.push((t / s.dt).round() as usize);
        }
        steps.sort_unstable();
        steps.dedup();
        let m = s.window_points.max(2);
        let mut points = vec![s.x0];
        points.extend((0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64));
        LongRunLayout {
            dt: s.dt,
            t_max: s.t_max,
            points,
            checkpoint_steps: steps,
            increment_starts: increment_starts.iter().copied().filter(|n| n + 2.0 <= s.t_max).collect(),
        }
    }

    pub fn checkpoint_time(&self, k: usize) -> f64 {
        self.checkpoint_steps[k] as f64 * self.dt
    }

    pub fn n_windows(&self) -> usize {
        (self.t_max.floor() as usize).saturating_sub(FIRST_WINDOW)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongPath {
    pub index: usize,
    pub seed: u64,
    /// `g(t_k, x0)` at the layout checkpoints.
    pub checkpoints: Vec<f64>,
    /// `inf { g(n + h, x) : h in [0, 1], |x| <= 1 }` for `n = 8, 9, ...`.
    pub window_inf: Vec<f64>,
    /// `sup - inf` of `g` over `[n, n + 2] x B(0, 1)` per increment start.
    pub increment_range: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LongRunEnsemble {
    pub params: ModelParams,
    pub layout: LongRunLayout,
    pub paths: Vec<LongPath>,
}

/// Simulates `s.paths` long paths of `g_beta` (sigma = 1, no drift).
pub fn simulate_long_runs(
    params: &ModelParams,
    s: &LongRunSection,
    layout: LongRunLayout,
    master_seed: u64,
    workers: usize,
) -> Result<LongRunEnsemble> {
    let basis = basis(params, s.modes, s.grid_points)?;
    let base = ModeNoise::new(&basis, NoiseKind::White, 0)?;
    let settings = SolverSettings::new(s.dt, s.t_max);
    let zero = vec![0.0; basis.grid.len()];
    let lay = &layout;
    let paths: Vec<Result<LongPath>> = with_workers(workers, || {
        (0..s.paths)
            .into_par_iter()
            .map(|index| {
                let seed = derive_seed(master_seed, &[index as u64, LONG_RUN_STREAM]);
                let noise = base.with_seed(seed);
                let mut solver = Solver::new(params, &DriftSpec::Zero, &zero, &basis, &noise, &settings)?;
                solver.set_observation_points(&lay.points);
                let mut acc = Accumulator::new(lay);
                solver.run_observed(&mut |t: f64, v: &[f64]| acc.push(t, v));
                Ok(LongPath {
                    index,
                    seed,
                    checkpoints: acc.checkpoints,
                    window_inf: acc.window_inf,
                    increment_range: acc.inc_max.iter().zip(&acc.inc_min).map(|(a, b)| a - b).collect(),
                })
            })
            .collect()
    })?;
    let paths = paths.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(LongRunEnsemble { params: *params, layout, paths })
}

struct Accumulator<'a> {
    layout: &'a LongRunLayout,
    next_checkpoint: usize,
    checkpoints: Vec<f64>,
    window_inf: Vec<f64>,
    inc_max: Vec<f64>,
    inc_min: Vec<f64>,
}

impl<'a> Accumulator<'a> {
    fn new(layout: &'a LongRunLayout) -> Self {
        let k = layout.increment_starts.len();
        Accumulator {
            layout,
            next_checkpoint: 0,
            checkpoints: Vec::with_capacity(layout.checkpoint_steps.len()),
            window_inf: vec![f64::INFINITY; layout.n_windows()],
            inc_max: vec![f64::NEG_INFINITY; k],
            inc_min: vec![f64::INFINITY; k],
        }
    }

    fn push(&mut self, t: f64, v: &[f64]) {
        let lay = self.layout;
        let step = (t / lay.dt).round() as usize;
        while self.next_checkpoint < lay.checkpoint_steps.len() && lay.checkpoint_steps[self.next_checkpoint] == step {
            self.checkpoints.push(v[0]);
            self.next_checkpoint += 1;
        }
        let window = &v[1..];
        let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let eps = 1e-9 * t.max(1.0);
        // a step on an integer time closes window n - 1 and opens window n
        let n = (t + eps).floor();
        for m in [n - 1.0, n] {
            if m >= FIRST_WINDOW as f64 && t >= m - eps && t <= m + 1.0 + eps {
                let w = m as usize - FIRST_WINDOW;
                if w < self.window_inf.len() {
                    self.window_inf[w] = self.window_inf[w].min(lo);
                }
            }
        }
        for (j, &start) in lay.increment_starts.iter().enumerate() {
            if t >= start - eps && t <= start + 2.0 + eps {
                self.inc_max[j] = self.inc_max[j].max(hi);
                self.inc_min[j] = self.inc_min[j].min(lo);
            }
        }
    }
}
