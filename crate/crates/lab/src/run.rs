//! Executes the checks listed in a scenario config and writes the reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::campaign::{run_blowup_campaign, BlowupReport};
use crate::checks::*;
use crate::config::{CheckKind, ScenarioConfig};
use crate::ensemble::{simulate_long_runs, LongRunEnsemble, LongRunLayout};
use crate::error::Result;
use crate::report::{text_report, threshold_header, ReportWriter};

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// Overrides every ensemble size.
    pub paths: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.campaign.seed = s;
        }
        if let Some(n) = self.paths {
            cfg.campaign.paths = n;
            cfg.convolution.paths = n;
            cfg.moments.paths = n;
            cfg.long_run.paths = n;
        }
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        if let Some(dt) = self.dt {
            cfg.solver.dt = dt;
        }
        if let Some(h) = self.horizon {
            cfg.solver.horizon = h;
        }
        if let Some(w) = self.workers {
            cfg.campaign.workers = w;
        }
        cfg.validate()
    }
}

#[derive(Debug, Clone, Serialize)]
struct BlowupSummary<'a> {
    scenario: &'a str,
    drift: &'a str,
    n_paths: usize,
    blown_up: usize,
    unresolved: usize,
    horizon_reached: usize,
    fraction: f64,
    ci_low: f64,
    ci_high: f64,
    horizon: f64,
    boundary_warning: bool,
}

impl<'a> From<&'a BlowupReport> for BlowupSummary<'a> {
    fn from(r: &'a BlowupReport) -> Self {
        BlowupSummary {
            scenario: &r.scenario,
            drift: &r.drift,
            n_paths: r.n_paths,
            blown_up: r.blown_up,
            unresolved: r.unresolved,
            horizon_reached: r.horizon_reached,
            fraction: r.fraction,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            horizon: r.horizon,
            boundary_warning: r.boundary_warning,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    master_seed: u64,
    conventions: String,
    checks: &'a [CheckResult],
    blowup: Option<BlowupSummary<'a>>,
    divergent: Option<&'a DivergentSummary>,
    blocking_failed: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub results: Vec<CheckResult>,
    pub blowup: Option<BlowupReport>,
    pub blocking_failed: bool,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.blocking_failed)
    }
}

pub fn run_config(path: &Path, overrides: &Overrides) -> Result<RunOutcome> {
    let mut cfg = ScenarioConfig::load(path)?;
    overrides.apply(&mut cfg)?;
    run_scenario(&cfg)
}

/// Runs every listed check in config order and writes the outputs.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let mut out = ReportWriter::new(&cfg.output.dir)?;
    let model = cfg.model.params()?;
    let seed = cfg.campaign.seed;
    let workers = cfg.campaign.workers;
    let mut results = Vec::new();
    let mut blowup = None;
    let mut divergent = None;
    let mut long: Option<LongRunEnsemble> = None;
    for kind in &cfg.checks.run {
        let r = match kind {
            CheckKind::Blowup => {
                let start = Instant::now();
                let rep = run_blowup_campaign(cfg)?;
                out.csv("blowup_paths.csv", &rep.paths)?;
                let r = blowup_check(&rep, cfg.blowup.expect, cfg.blowup.min_fraction, start.elapsed().as_secs_f64());
                blowup = Some(rep);
                r
            }
            CheckKind::ConvolutionVariance => {
                let (r, samples) = convolution_variance_check(&model, &cfg.convolution, seed, workers)?;
                out.csv("convolution_samples.csv", &samples)?;
                r
            }
            CheckKind::MomentScaling => {
                let (r, rows) = moment_scaling_check(&model, &cfg.moments, seed, workers)?;
                out.csv("moment_scaling.csv", &rows)?;
                r
            }
            CheckKind::Lil | CheckKind::IncrementSupremum | CheckKind::DivergentInf => {
                if long.is_none() {
                    long = Some(long_runs(cfg, seed, workers)?);
                }
                let e = long.as_ref().expect("simulated above");
                match kind {
                    CheckKind::Lil => {
                        let (r, rows) = lil_check(e, &cfg.lil)?;
                        out.csv("lil.csv", &rows)?;
                        r
                    }
                    CheckKind::IncrementSupremum => {
                        let (r, rows) = increment_supremum_check(e, &cfg.increments)?;
                        out.csv("increment_supremum.csv", &rows)?;
                        r
                    }
                    _ => {
                        let (r, rows, summary) = divergent_inf_sequence(e, cfg.divergent.t_low, cfg.divergent.pass_rate, &cfg.drift)?;
                        out.csv("divergent_records.csv", &rows)?;
                        divergent = Some(summary);
                        r
                    }
                }
            }
        };
        results.push(r);
    }
    let blocking_failed =
        results.iter().zip(&cfg.checks.run).any(|(r, k)| cfg.checks.blocking.contains(k) && !r.pass);
    out.checks_csv(&results)?;
    let summary = Summary {
        scenario: &cfg.name,
        master_seed: seed,
        conventions: threshold_header(cfg),
        checks: &results,
        blowup: blowup.as_ref().map(BlowupSummary::from),
        divergent: divergent.as_ref(),
        blocking_failed,
    };
    out.json("summary.json", &summary)?;
    out.text("report.txt", &text_report(cfg, &results))?;
    Ok(RunOutcome { results, blowup, blocking_failed, files: out.files().to_vec() })
}

/// Shared long-run ensemble for the iterated-logarithm, increment and
/// divergent-infimum checks.
pub fn long_runs(cfg: &ScenarioConfig, seed: u64, workers: usize) -> Result<LongRunEnsemble> {
    let params = cfg.model.free_white(cfg.long_run.half_width)?;
    let layout = LongRunLayout::new(&cfg.long_run, cfg.lil.per_doubling, &cfg.lil.t_max, &cfg.increments.n);
    simulate_long_runs(&params, &cfg.long_run, layout, seed, workers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_check_list_succeeds_with_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ScenarioConfig::default();
        cfg.output.dir = dir.path().to_path_buf();
        let o = run_scenario(&cfg).unwrap();
        assert!(o.results.is_empty() && !o.blocking_failed);
        assert_eq!(o.exit_code(), 0);
        let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(text.contains("no checks run"));
        let csv = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn overrides_reach_every_ensemble() {
        let mut cfg = ScenarioConfig::default();
        let o = Overrides { seed: Some(5), paths: Some(7), dt: Some(0.02), horizon: Some(3.0), ..Overrides::default() };
        o.apply(&mut cfg).unwrap();
        assert_eq!((cfg.campaign.seed, cfg.campaign.paths, cfg.long_run.paths), (5, 7, 7));
        assert_eq!((cfg.solver.dt, cfg.solver.horizon), (0.02, 3.0));
    }
}
