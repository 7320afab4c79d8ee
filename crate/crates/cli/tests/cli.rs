//! Integration tests for the runner and the binary: output correctness,
//! byte-level reproducibility, manifest round-trips, and exit codes.

use risklab_cli::config::{build_config, parse_config, ExperimentId};
use risklab_cli::runner::run_experiment;
use std::path::Path;
use std::process::Command;

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn run_to_dir(experiment: ExperimentId, pairs: &[(&str, &str)], dir: &Path) -> Vec<String> {
    let mut overrides: Vec<(String, String)> =
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    overrides.push(("out".into(), dir.to_string_lossy().into_owned()));
    let config = build_config(Some(experiment), None, &overrides).unwrap();
    let output = run_experiment(&config).unwrap();
    output.files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect()
}

#[test]
fn ddcurve_rows_match_direct_bound_calls() {
    let dir = tempfile::tempdir().unwrap();
    run_to_dir(
        ExperimentId::HypercubeDdcurve,
        &[("n", "256"), ("d_grid", "1..64")],
        dir.path(),
    );
    let csv = read(&dir.path().join("hypercube_ddcurve.csv"));
    let rule = risklab::hypercube::KRule::MaxFeasible { epsilon: 0.1 };
    let mut feasible_rows = 0;
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let d: u32 = cells[0].parse().unwrap();
        let n: u64 = cells[1].parse().unwrap();
        if cells[2] == "none" {
            assert_eq!(cells[5], "undefined");
            continue;
        }
        let k: u32 = cells[2].parse().unwrap();
        assert_eq!(Some(k), rule.k_for(n, d));
        let right: f64 = cells[5].parse().unwrap();
        let expected = risklab::hypercube::generalization_bound_value(n, d, k);
        assert_eq!(right.to_bits(), expected.to_bits(), "d={d}");
        feasible_rows += 1;
    }
    assert!(feasible_rows >= 50);
}

#[test]
fn reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let pairs: &[(&str, &str)] = &[
        ("d", "6"),
        ("n", "16"),
        ("seed", "7"),
        ("replicates", "50"),
    ];
    run_to_dir(ExperimentId::HypercubeSurrogate, pairs, dir_a.path());
    run_to_dir(ExperimentId::HypercubeSurrogate, pairs, dir_b.path());
    assert_eq!(
        read(&dir_a.path().join("hypercube_surrogate.csv")),
        read(&dir_b.path().join("hypercube_surrogate.csv"))
    );
}

#[test]
fn decompose_rows_satisfy_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    run_to_dir(
        ExperimentId::LinregDecompose,
        &[
            ("n", "10"),
            ("d", "40"),
            ("sigma", "1.0"),
            ("family", "isotropic"),
            ("replicates", "100"),
            ("seed", "3"),
        ],
        dir.path(),
    );
    let csv = read(&dir.path().join("linreg_decompose.csv"));
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let residual: f64 = cells[6].parse().unwrap();
        let ld: f64 = cells[4].parse().unwrap();
        assert!(residual.abs() <= 1e-8 * ld.abs().max(1.0), "residual {residual}");
        rows += 1;
    }
    assert_eq!(rows, 100);
}

#[test]
fn manifest_config_suffices_to_rerun() {
    let dir_a = tempfile::tempdir().unwrap();
    run_to_dir(
        ExperimentId::Spectra,
        &[
            ("family", "power-log-law"),
            ("alpha", "1.0"),
            ("gamma", "2.0"),
            ("dim_rule", "linear"),
            ("dim", "10"),
            ("n_grid", "50..200:50"),
        ],
        dir_a.path(),
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir_a.path().join("manifest.json"))).unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut pairs: Vec<(String, String)> = manifest["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().unwrap().to_string()))
        .collect();
    pairs.retain(|(k, _)| k != "out");
    pairs.push(("out".into(), dir_b.path().to_string_lossy().into_owned()));
    let config = build_config(None, None, &pairs).unwrap();
    run_experiment(&config).unwrap();
    assert_eq!(read(&dir_a.path().join("spectra.csv")), read(&dir_b.path().join("spectra.csv")));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        "experiment = \"hypercube-risk\"\nd = 4\nn = 8\nseed = 1\nreplicates = 5\n",
    )
    .unwrap();
    let text = read(&config_path);
    let cfg = build_config(
        Some(ExperimentId::HypercubeRisk),
        Some(&text),
        &[("replicates".into(), "9".into()), ("out".into(), dir.path().to_string_lossy().into_owned())],
    )
    .unwrap();
    assert_eq!(cfg.replicates, 9);
    let out = run_experiment(&cfg).unwrap();
    assert!(out.files.iter().any(|f| f.ends_with("hypercube_risk.csv")));
    let csv = read(&dir.path().join("hypercube_risk.csv"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn parse_config_standalone_document() {
    let cfg = parse_config("experiment = \"hypercube-adversary\"\nd = 10\nn = 8\n").unwrap();
    assert_eq!(cfg.id, ExperimentId::HypercubeAdversary);
}

// ------------------------------------------------------------------
// Binary-level checks
// ------------------------------------------------------------------

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_risklab"))
}

#[test]
fn binary_help_exits_zero() {
    let out = binary().arg("--help").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("hypercube-ddcurve"));
}

#[test]
fn binary_usage_error_exits_one() {
    let out = binary().arg("not-an-experiment").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Valid subcommand, missing required key.
    let out = binary().args(["hypercube-risk", "d=5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'n'"));
}

#[test]
fn binary_runtime_error_exits_two() {
    let out = binary()
        .args(["hypercube-risk", "--config", "/nonexistent/risklab.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_success_writes_files_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args(["hypercube-risk", "d=4", "n=8", "--replicates", "5", "--seed", "2"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("hypercube_risk.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn out_dir_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary()
        .args(["hypercube-risk", "d=3", "n=4", "--replicates", "3"])
        .env("RISKLAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("hypercube_risk.csv").exists());
}
