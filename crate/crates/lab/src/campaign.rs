//! Monte Carlo blowup campaigns over independent noise paths.

use rayon::prelude::*;
use serde::Serialize;

use blowup_core::blowup::PathStatus;
use blowup_core::model::Domain;
use blowup_core::noise::{derive_seed, ModeNoise, NoiseKind};
use blowup_core::solver::{solve_ball, solve_free};

use crate::config::{Expectation, ScenarioConfig};
use crate::error::{LabError, Result};
use crate::stats::{wilson_interval, Z95};

/// Runs `f` on a pool of `workers` threads (0: all cores).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Check(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Per-path seed, recorded with every path for replay.
pub fn path_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, &[index as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub index: usize,
    pub seed: u64,
    pub status: String,
    pub t_blow: Option<f64>,
    pub final_sup: f64,
    pub accepted_steps: usize,
    pub min_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub scenario: String,
    pub drift: String,
    pub n_paths: usize,
    pub blown_up: usize,
    pub unresolved: usize,
    pub horizon_reached: usize,
    /// Blown-up paths over all paths; unresolved paths count as not blown up.
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub horizon: f64,
    pub boundary_warning: bool,
    pub paths: Vec<PathRecord>,
}

impl BlowupReport {
    /// Verdict against the declared expectation.
    pub fn meets(&self, expect: Expectation, min_fraction: f64) -> bool {
        match expect {
            Expectation::Positive => self.ci_low > 0.0,
            Expectation::Zero => self.blown_up == 0,
            Expectation::AtLeast => self.fraction >= min_fraction,
            Expectation::None => true,
        }
    }
}

fn status_name(s: &PathStatus) -> String {
    match s {
        PathStatus::Alive => "alive".into(),
        PathStatus::BlownUp { .. } => "blown_up".into(),
        PathStatus::HorizonReached => "horizon_reached".into(),
        PathStatus::Unresolved { reason } => format!("unresolved: {reason}"),
    }
}

/// Solves `cfg.campaign.paths` independent paths. Results are ordered by path
/// index, so the report does not depend on the worker count.
pub fn run_blowup_campaign(cfg: &ScenarioConfig) -> Result<BlowupReport> {
    let params = cfg.model.params()?;
    let basis = cfg.solver.basis(&params)?;
    let settings = cfg.solver.settings();
    let u0 = cfg.initial.values(&basis)?;
    let base = ModeNoise::new(&basis, NoiseKind::from_eta(params.eta), 0)?;
    let c = &cfg.campaign;
    let indices: Vec<usize> = (c.first_path..c.first_path + c.paths).collect();
    let solved: Vec<Result<(PathRecord, bool)>> = with_workers(c.workers, || {
        indices
            .par_iter()
            .map(|&index| {
                let seed = path_seed(c.seed, index);
                let noise = base.with_seed(seed);
                let f = match params.domain {
                    Domain::Ball => solve_ball(&params, &cfg.drift, &u0, &basis, &noise, &settings)?,
                    Domain::TruncatedSpace { .. } => solve_free(&params, &cfg.drift, &u0, &basis, &noise, &settings)?,
                };
                let rec = PathRecord {
                    index,
                    seed,
                    status: status_name(&f.status),
                    t_blow: f.status.blowup_time(),
                    final_sup: f.sup_norm.last().copied().unwrap_or(0.0),
                    accepted_steps: f.accepted_steps,
                    min_dt: f.min_dt,
                };
                Ok((rec, f.boundary_warning))
            })
            .collect()
    })?;
    let mut paths = Vec::with_capacity(solved.len());
    let mut boundary_warning = false;
    for r in solved {
        let (rec, warn) = r?;
        boundary_warning |= warn;
        paths.push(rec);
    }
    let blown_up = paths.iter().filter(|p| p.t_blow.is_some()).count();
    let unresolved = paths.iter().filter(|p| p.status.starts_with("unresolved")).count();
    let horizon_reached = paths.iter().filter(|p| p.status == "horizon_reached").count();
    let n = paths.len();
    let (ci_low, ci_high) = wilson_interval(blown_up, n, Z95);
    Ok(BlowupReport {
        scenario: cfg.name.clone(),
        drift: cfg.drift.describe(),
        n_paths: n,
        blown_up,
        unresolved,
        horizon_reached,
        fraction: if n == 0 { 0.0 } else { blown_up as f64 / n as f64 },
        ci_low,
        ci_high,
        horizon: settings.horizon,
        boundary_warning,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitialKind;

    fn small() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.campaign.paths = 6;
        cfg.solver.horizon = 0.5;
        cfg
    }

    #[test]
    fn quiet_zero_start_never_blows_up() {
        let mut cfg = small();
        cfg.model.sigma = 0.0;
        cfg.initial.kind = InitialKind::Zero;
        let r = run_blowup_campaign(&cfg).unwrap();
        assert_eq!(r.blown_up, 0);
        assert_eq!(r.fraction, 0.0);
        assert!(r.paths.iter().all(|p| p.final_sup == 0.0));
    }

    #[test]
    fn resumed_campaign_reuses_path_seeds() {
        let cfg = small();
        let full = run_blowup_campaign(&cfg).unwrap();
        let mut tail = cfg.clone();
        tail.campaign.first_path = 4;
        tail.campaign.paths = 2;
        let part = run_blowup_campaign(&tail).unwrap();
        assert_eq!(part.paths[..], full.paths[4..]);
    }
}
