//! End-to-end checks of the `psca-bench` binary.

use std::path::Path;
use std::process::Command;

use psca_bench::report::{parse_trajectory_csv, read_report};

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_psca-bench"))
}

fn split(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_consistent_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args(split(
            "run --problem saddle_quartic:d=10 --algo psca --eps 0.01 --delta 0.1 --seed 7 --out-dir",
        ))
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("psca_saddle_quartic_d_10_seed7.csv");
    let json = dir.path().join("psca_saddle_quartic_d_10_seed7.json");
    let rows = parse_trajectory_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    let report = read_report(&json).unwrap();
    assert!(matches!(
        report.termination.as_deref(),
        Some("returned_xtilde") | Some("max_iters")
    ));
    assert_eq!(rows.len(), report.iterations + 1);
    assert!((rows.last().unwrap().f - report.final_objective.unwrap()).abs() <= 1e-12);
    assert_eq!(
        rows.iter().filter(|r| r.perturbed == 1).count(),
        report.perturbation_count
    );
    assert!(report.scales.is_some() && report.params.is_some() && report.certificate.is_some());
}

#[test]
fn invalid_config_lists_every_violation() {
    let out = bench().args(split("run --eps 0 --delta 1.5 --s 0")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eps must satisfy 0 < eps <= L1^2/L2"), "{err}");
    assert!(err.contains("delta must satisfy"), "{err}");
    assert!(err.contains("s must satisfy"), "{err}");
}

#[test]
fn out_dir_defaults_to_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args(split("run --problem quadratic:d=3,spectrum=spd --algo gd --eps 0.001"))
        .env("PSCA_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files_with_ext(dir.path(), "csv").len(), 1);
}

#[test]
fn driver_error_gives_nonzero_exit_and_partial_report() {
    // One inner iteration cannot solve the split model of Rosenbrock.
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args(split(
            "run --problem rosenbrock:d=2 --algo sca --surrogate quadratic_split --inner-max-iters 1 --eps 0.01 --out-dir",
        ))
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let report = read_report(&dir.path().join("sca_rosenbrock_d_2_seed0.json")).unwrap();
    assert!(
        report.error.as_deref().unwrap().contains("inner solve"),
        "{:?}",
        report.error
    );
    assert!(report.termination.is_none());
    assert_eq!(report.config.problem, "rosenbrock:d=2");
}

#[test]
fn sweep_writes_one_file_per_seed_and_an_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench()
        .args(split(
            "run --problem saddle_quartic:d=4 --algo pgd --eps 0.01 --seed 3 --seeds 6 --out-dir",
        ))
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files_with_ext(dir.path(), "csv").len(), 6);
    let agg: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("pgd_saddle_quartic_d_4_aggregate.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(agg["runs"], 6);
    let (lo, hi) = (
        agg["sosp_rate_ci95"][0].as_f64().unwrap(),
        agg["sosp_rate_ci95"][1].as_f64().unwrap(),
    );
    let rate = agg["sosp_rate"].as_f64().unwrap();
    assert!(lo <= rate && rate <= hi);
}

#[test]
fn scaling_subcommand_rejects_two_tolerances() {
    let out = bench()
        .args(split("scaling --problem rosenbrock:d=2 --algo gd --eps-list 0.1,0.01"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 3"));
}
