//! CSV, JSON and plain-text outputs. CSVs carry no timings so that reruns
//! compare byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::checks::CheckResult;
use crate::config::ScenarioConfig;
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    statistic: f64,
    expected: f64,
    tolerance: f64,
    comparison: crate::checks::Comparison,
    pass: bool,
    sample_size: usize,
    flagged: bool,
    note: &'a str,
}

/// Collects output files and writes them into one directory.
pub struct ReportWriter {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl ReportWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ReportWriter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn checks_csv(&mut self, results: &[CheckResult]) -> Result<PathBuf> {
        let rows: Vec<CheckRow> = results
            .iter()
            .map(|r| CheckRow {
                name: &r.name,
                statistic: r.statistic,
                expected: r.expected,
                tolerance: r.tolerance,
                comparison: r.comparison,
                pass: r.pass,
                sample_size: r.sample_size,
                flagged: r.flagged,
                note: &r.note,
            })
            .collect();
        if rows.is_empty() {
            // header only
            let path = self.dir.join("checks.csv");
            fs::write(&path, "name,statistic,expected,tolerance,comparison,pass,sample_size,flagged,note\n")?;
            self.files.push(path.clone());
            return Ok(path);
        }
        self.csv("checks.csv", &rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| crate::error::LabError::Io(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path.clone());
        Ok(path)
    }
}

/// Desk-scale pass conventions, printed at the top of every report.
pub fn threshold_header(cfg: &ScenarioConfig) -> String {
    format!(
        "pass conventions: moment slope within {:.0}%, LIL median band [{}, {}], record rate >= {:.0}%, convolution variance within {:.0}%\n\
         the almost-sure limits are asymptotic; these bands are desk-scale proxies",
        100.0 * cfg.moments.tolerance,
        cfg.lil.band[0],
        cfg.lil.band[1],
        100.0 * cfg.divergent.pass_rate,
        100.0 * cfg.convolution.tolerance,
    )
}

pub fn text_report(cfg: &ScenarioConfig, results: &[CheckResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", cfg.name);
    let _ = writeln!(s, "master seed: {}", cfg.campaign.seed);
    let _ = writeln!(s, "{}", threshold_header(cfg));
    let _ = writeln!(s);
    if results.is_empty() {
        let _ = writeln!(s, "no checks run");
    }
    for r in results {
        let _ = writeln!(
            s,
            "{} {}: statistic {:.6} expected {:.6} tol {:.4} ({:?}), n = {}, {:.2} s{}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.statistic,
            r.expected,
            r.tolerance,
            r.comparison,
            r.sample_size,
            r.runtime_s,
            if r.flagged { " [flagged]" } else { "" }
        );
        if !r.note.is_empty() {
            let _ = writeln!(s, "    {}", r.note);
        }
    }
    s
}
