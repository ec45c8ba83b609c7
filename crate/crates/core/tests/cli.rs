//! Black-box tests of the command-line front end: exit codes, produced
//! artifacts, and determinism of cached study outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_toric-spectra")
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples/configs")
}

fn run(sub: &str, config: &Path, out: &Path, force: bool) -> Output {
    let mut cmd = Command::new(bin());
    cmd.arg(sub).arg("--config").arg(config).arg("--out").arg(out);
    if force {
        cmd.arg("--force");
    }
    cmd.output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn legendre_produces_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("legendre", &config_dir().join("legendre_fs.json"), tmp.path(), false);
    assert_success(&out);
    let csv = read(&tmp.path().join("legendre.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,f,x_star,f_second"));
    assert_eq!(lines.count(), 201);
    // spot check: for the round potential, f(s) = log(1 + e^s) > 0 and the
    // moment coordinate stays in (0, 1)
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (s, f, x) = (cols[0], cols[1], cols[2]);
        assert!((f - (1.0 + s.exp()).ln()).abs() < 1e-9 || s > 30.0);
        assert!(x > 0.0 && x < 1.0);
    }
}

#[test]
fn gram_matches_closed_form_diagonal() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("gram", &config_dir().join("gram_fs.json"), tmp.path(), false);
    assert_success(&out);
    let csv = read(&tmp.path().join("log_diag.csv"));
    let first = csv.lines().nth(1).unwrap();
    let v: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    // entry (0,0) at k = 16: 2 pi * Beta(1, 17) = 2 pi / 17
    let expect = (2.0 * std::f64::consts::PI / 17.0f64).ln();
    assert!((v - expect).abs() < 1e-10, "{v} vs {expect}");
    let json: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("gram.json"))).unwrap();
    assert_eq!(json["spec"]["k"], 16);
}

#[test]
fn geodesic_exports_spectrum_and_measure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "geodesic",
        &config_dir().join("geodesic_quadratic.json"),
        tmp.path(),
        false,
    );
    assert_success(&out);
    let spectrum = read(&tmp.path().join("spectrum.csv"));
    assert_eq!(spectrum.lines().count(), 1 + 65); // header + k + 1 rows
    let measure = read(&tmp.path().join("spectral_measure.csv"));
    assert!(measure.starts_with("atom,weight\n"));
    let weights: f64 = measure
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((weights - 1.0).abs() < 1e-12);
    let json: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("geodesic.json"))).unwrap();
    let dist = json["distance"].as_f64().unwrap();
    assert!((dist - (1.0f64 / 20.0).sqrt()).abs() < 0.05, "distance {dist}");
}

#[test]
fn toeplitz_reports_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("toeplitz", &config_dir().join("toeplitz_fs.json"), tmp.path(), false);
    assert_success(&out);
    let csv = read(&tmp.path().join("diagnostics.csv"));
    assert!(csv.starts_with("k,diagnostic_name,value\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3); // two symbols, three rows each
    let ops: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("operators.json"))).unwrap();
    assert_eq!(ops.as_array().unwrap().len(), 2);
}

#[test]
fn bergman_exports_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "bergman",
        &config_dir().join("bergman_quadratic.json"),
        tmp.path(),
        false,
    );
    assert_success(&out);
    let csv = read(&tmp.path().join("bergman.csv"));
    assert!(csv.starts_with("s,fs_metric,f_t\n"));
    let json: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("bergman.json"))).unwrap();
    let sup = json["sup_deviation"].as_f64().unwrap();
    assert!(sup > 0.0 && sup < 0.1, "sup_deviation {sup}");
}

#[test]
fn study_runs_caches_and_recomputes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("study.json");
    std::fs::write(
        &cfg,
        r#"{
            "u0": {"poly": []},
            "u1": {"poly": [0.0, 0.0, 0.5]},
            "flavor": "hilb",
            "k_list": [4, 8],
            "t_grid": [0.0, 0.5, 1.0],
            "limit_grid": 1000
        }"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let first = run("study", &cfg, &out_dir, false);
    assert_success(&first);
    let hash_dir = std::fs::read_dir(&out_dir)
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let records = read(&hash_dir.join("records.csv"));
    assert_eq!(records.lines().count(), 1 + 2); // header + one row per k

    let second = run("study", &cfg, &out_dir, false);
    assert_success(&second);
    assert!(
        String::from_utf8_lossy(&second.stderr).contains("cached"),
        "second run should hit the cache"
    );

    let third = run("study", &cfg, &out_dir, true);
    assert_success(&third);
    assert_eq!(records, read(&hash_dir.join("records.csv")), "recompute must be deterministic");
}

#[test]
fn invalid_configs_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");

    std::fs::write(&bad, "{ not json").unwrap();
    let out = run("legendre", &bad, tmp.path(), false);
    assert_eq!(out.status.code(), Some(2));

    // missing required field
    std::fs::write(&bad, r#"{"u": {"poly": []}, "flavor": "hilb"}"#).unwrap();
    let out = run("gram", &bad, tmp.path(), false);
    assert_eq!(out.status.code(), Some(2));

    // t outside [0, 1]
    std::fs::write(
        &bad,
        r#"{"u0": {"poly": []}, "u1": {"poly": []}, "k": 8, "flavor": "hilb", "t": 1.5}"#,
    )
    .unwrap();
    let out = run("bergman", &bad, tmp.path(), false);
    assert_eq!(out.status.code(), Some(2));

    // k below the adjoint minimum
    std::fs::write(
        &bad,
        r#"{"u0": {"poly": []}, "u1": {"poly": []}, "flavor": "adjoint", "k_list": [1, 2]}"#,
    )
    .unwrap();
    let out = run("study", &bad, tmp.path(), false);
    assert_eq!(out.status.code(), Some(2));

    // nonexistent file
    let out = run("legendre", &tmp.path().join("missing.json"), tmp.path(), false);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("steep.json");
    // a geodesic this steep pushes the centered pencil past its exponent
    // budget at k = 64
    std::fs::write(
        &cfg,
        r#"{"u0": {"poly": []}, "u1": {"poly": [0.0, 20.0]}, "k": 64, "flavor": "hilb"}"#,
    )
    .unwrap();
    let out = run("geodesic", &cfg, tmp.path(), false);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn shipped_study_config_is_valid() {
    // keep the shipped example in sync with the schema without paying for a
    // full run: parse + validate through the library
    let text = read(&config_dir().join("study_quadratic.json"));
    let cfg: toric_spectra::experiment::ExperimentConfig =
        serde_json::from_str(&text).unwrap();
    cfg.validate().unwrap();
    let text = read(&config_dir().join("study_translation.json"));
    let cfg: toric_spectra::experiment::ExperimentConfig =
        serde_json::from_str(&text).unwrap();
    cfg.validate().unwrap();
    let text = read(&config_dir().join("study_linear.json"));
    let cfg: toric_spectra::experiment::ExperimentConfig =
        serde_json::from_str(&text).unwrap();
    cfg.validate().unwrap();
    let text = read(&config_dir().join("study_quadratic_adjoint.json"));
    let cfg: toric_spectra::experiment::ExperimentConfig =
        serde_json::from_str(&text).unwrap();
    cfg.validate().unwrap();
}
