use std::fs;
use std::path::Path;
use std::process::Command;

use fairclust::data::resolve_profile;
use fairclust::eval::{k_sweep, run_experiment, sweep_curves, ExperimentSpec};
use fairclust::ObjectiveKind;

fn synthetic_spec(objective: ObjectiveKind, lambdas: &[f64]) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(resolve_profile("synthetic").unwrap(), objective);
    spec.lambdas = lambdas.to_vec();
    spec.seed = 3;
    spec
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_runs_write_identical_reports() {
    let spec = synthetic_spec(ObjectiveKind::KMeans, &[0.0, 10.0]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&spec, a.path()).unwrap();
    run_experiment(&spec, b.path()).unwrap();
    let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
    assert_eq!(fa.len(), 5);
    assert_eq!(fa, fb);
}

#[test]
fn sweep_picks_the_first_fair_lambda() {
    let mut spec = synthetic_spec(ObjectiveKind::KMeans, &[0.0, 10.0]);
    spec.epsilon = 0.01;
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&spec, dir.path()).unwrap();
    assert!(report.outcome.satisfied);
    assert_eq!(report.outcome.chosen_lambda(), 10.0);
    assert!(report.outcome.runs[0].result.metrics.fairness_error > 1.0);
    assert_eq!(report.outcome.runs[0].result.metrics.min_balance, 0.0);

    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let chosen: Vec<&str> = summary.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(chosen, ["0", "1"]);
    for lambda in ["0", "10"] {
        let trace = fs::read_to_string(dir.path().join(format!("trace_lambda_{lambda}.csv"))).unwrap();
        assert!(trace.lines().all(|l| l.split(',').count() == 4));
    }
    let labels = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 401);
}

#[test]
fn fairness_error_trend_over_lambda() {
    let spec = synthetic_spec(ObjectiveKind::KMeans, &[1.0, 5.0, 10.0, 50.0]);
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&spec, dir.path()).unwrap();
    let errors: Vec<f64> = report.outcome.runs.iter().map(|r| r.result.metrics.fairness_error).collect();
    let inversions = errors.windows(2).filter(|w| w[1] > w[0] + 1e-12).count();
    assert!(inversions <= 1, "{errors:?}");

    let curves = sweep_curves(dir.path()).unwrap();
    let text = fs::read_to_string(curves).unwrap();
    let lambdas: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(lambdas, [1.0, 5.0, 10.0, 50.0]);
}

#[test]
fn fair_objective_is_not_below_vanilla_for_each_k() {
    let spec = synthetic_spec(ObjectiveKind::KMeans, &[10.0]);
    let dir = tempfile::tempdir().unwrap();
    let rows = k_sweep(&spec, &[2, 3, 4], 10.0, Some(dir.path())).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r.fair >= r.vanilla - 1e-9, "{r:?}");
    }
    let text = fs::read_to_string(dir.path().join("k_sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

fn cli() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairclust"));
    cmd.env("RUST_LOG", "off");
    cmd
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ok");
    let status = cli()
        .args(["run", "--profile", "synthetic", "--objective", "kmeans", "--lambda", "0,10"])
        .args(["--epsilon", "0.01", "--seed", "3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("summary.csv").exists());

    let unmet = cli()
        .args(["run", "--profile", "synthetic", "--objective", "kmeans", "--lambda", "0"])
        .args(["--epsilon", "0.01", "--seed", "3", "--out"])
        .arg(dir.path().join("unmet"))
        .status()
        .unwrap();
    assert_eq!(unmet.code(), Some(2));

    let missing = cli()
        .args(["run", "--profile", "adult", "--objective", "kmeans", "--data-dir"])
        .arg(dir.path())
        .arg("--out")
        .arg(dir.path().join("adult"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("adult.data"));

    let curves = cli().arg("curves").arg(&out).status().unwrap();
    assert_eq!(curves.code(), Some(0));
    assert!(out.join("curves.csv").exists());
}

#[test]
fn cli_export_writes_features_and_groups() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic.csv");
    let status = cli()
        .args(["export", "--profile", "synthetic-unequal", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("f0,f1,group"));
    assert_eq!(lines.count(), 400);
}
