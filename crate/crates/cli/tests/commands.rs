use std::process::Command;

use rtcouple_cli::commands::{exact_tv, meeting, verify_coupling};
use rtcouple_cli::config::ExperimentConfig;
use rtcouple_cli::output::CSV_COLUMNS;

fn rtcouple(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rtcouple")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn exact_tv_starts_at_five_sixths() {
    let cfg = ExperimentConfig {
        n: Some(3),
        t_max: Some(0),
        ..Default::default()
    };
    let out = exact_tv(&cfg).unwrap();
    assert_eq!(out.violations, 0);
    let d0 = out.records.iter().find(|r| r.statistic == "d").unwrap();
    assert_eq!(d0.t, Some(0));
    assert!((d0.value - 5.0 / 6.0).abs() < 1e-15);
}

#[test]
fn verify_coupling_reports_no_violations() {
    let cfg = ExperimentConfig {
        n: Some(8),
        ..Default::default()
    };
    let out = verify_coupling(&cfg).unwrap();
    assert_eq!(out.violations, 0);
    assert!(out.records.iter().filter(|r| r.statistic == "violations").all(|r| r.value == 0.0));
}

#[test]
fn meeting_needs_a_seed() {
    let cfg = ExperimentConfig {
        n: Some(10),
        ..Default::default()
    };
    assert!(meeting(&cfg).is_err());
}

#[test]
fn meeting_starts_at_one_and_reports_every_twentieth() {
    let cfg = ExperimentConfig {
        n: Some(40),
        trials: Some(8),
        seed: Some(1),
        ..Default::default()
    };
    let out = meeting(&cfg).unwrap();
    let means: Vec<_> = out.records.iter().filter(|r| r.statistic == "mean_s").collect();
    assert_eq!(means.len(), 21);
    assert_eq!(means[0].value, 1.0);
    assert_eq!(means.last().unwrap().t, Some(400));
}

#[test]
fn csv_output_has_header_and_exit_zero() {
    let (code, stdout, _) = rtcouple(&["verify-coupling", "--n", "10"]);
    assert_eq!(code, 0);
    let header = stdout.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, CSV_COLUMNS);
}

#[test]
fn json_output_parses() {
    let (code, stdout, _) = rtcouple(&["exact-tv", "--n", "4", "--t-max", "3", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert!(rows.iter().any(|r| r["statistic"] == "tau_mix" && r["value"] == 3.0));
    assert!(rows.iter().all(|r| r["wall_ms"].is_null()));
}

#[test]
fn wall_time_is_opt_in() {
    let (_, stdout, _) = rtcouple(&["exact-tv", "--n", "3", "--t-max", "1", "--format", "json", "--wall-time"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["wall_ms"].is_u64()));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(rtcouple(&["schramm", "--n", "100"]).0, 2);
    assert_eq!(rtcouple(&["exact-tv", "--eps", "2"]).0, 2);
    assert_eq!(rtcouple(&["exact-tv", "--config", "/nonexistent.toml"]).0, 2);
    assert_eq!(rtcouple(&["lemma-grid", "--n", "40"]).0, 2);
    assert_eq!(rtcouple(&[]).0, 2);
}
