use std::path::Path;

use blowup_lab::config::{CheckKind, DomainKind, ScenarioConfig};
use blowup_lab::run::run_scenario;

fn golden() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/golden.toml")
}

#[test]
fn golden_config_loads() {
    let cfg = ScenarioConfig::load(&golden()).unwrap();
    assert_eq!(cfg.name, "golden");
    assert_eq!(cfg.model.domain, DomainKind::Ball);
    assert!(cfg.checks.run.contains(&CheckKind::Blowup));
}

#[test]
fn unknown_field_is_named() {
    let err = ScenarioConfig::parse("name = \"x\"\n[solver]\ndt = 0.01\nstep_count = 3\n").unwrap_err();
    assert!(err.to_string().contains("step_count"), "{err}");
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(ScenarioConfig::parse("[model]\nbeta = 1.5\n").is_err());
    assert!(ScenarioConfig::parse("[solver]\ndt = -1.0\n").is_err());
    assert!(ScenarioConfig::parse("[drift]\nkind = \"teleport\"\n").is_err());
}

#[test]
fn empty_check_list_writes_header_only_outputs() {
    let mut cfg = ScenarioConfig::parse("name = \"empty\"\n[checks]\nrun = []\n").unwrap();
    let tmp = tempfile::tempdir().unwrap();
    cfg.output.dir = tmp.path().to_path_buf();
    let o = run_scenario(&cfg).unwrap();
    assert!(o.results.is_empty());
    assert_eq!(o.exit_code(), 0);
    let checks = std::fs::read_to_string(tmp.path().join("checks.csv")).unwrap();
    assert_eq!(checks.lines().count(), 1);
    let report = std::fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert!(report.contains("no checks run"));
}
