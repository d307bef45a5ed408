//! End-to-end checks of the command-line surface: exit codes, output
//! files, config handling, and byte determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equant"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("equant-cli-test-{}-{}", tag, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn unknown_hamiltonian_exits_2_and_lists_catalog() {
    let out = run(&["symbol", "--ham", "nosuch"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("oscillator"), "stderr: {err}");
    assert!(err.contains("quartic"), "stderr: {err}");
}

#[test]
fn bad_flag_exits_2() {
    let out = run(&["symbol", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_key_exits_2() {
    let dir = temp_dir("badcfg");
    let cfg = dir.join("bad.conf");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "transform"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_numeric_config_exits_2() {
    let out = run(&["symbol", "--dim", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn symbol_of_q_has_zero_correction_column() {
    let dir = temp_dir("symq");
    let out = run(&[
        "symbol",
        "--ham",
        "q",
        "--grid",
        "5x5",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("symbol.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let corr: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(corr.abs() < 1e-10, "correction {corr} in {line}");
    }
}

#[test]
fn deficiency_json_shape() {
    let dir = temp_dir("def");
    let out = run(&[
        "deficiency",
        "--op",
        "P",
        "--domain",
        "halfline",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("deficiency.json")).unwrap())
            .unwrap();
    assert_eq!(json["n_plus"], 1);
    assert_eq!(json["n_minus"], 0);
    assert_eq!(json["verdict"], "NotExtendable");
}

#[test]
fn deficiency_fullline_is_self_adjoint() {
    let dir = temp_dir("deffull");
    let out = run(&[
        "deficiency",
        "--op",
        "P",
        "--domain",
        "fullline",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("deficiency.json")).unwrap())
            .unwrap();
    assert_eq!(json["verdict"], "SelfAdjoint");
}

#[test]
fn cli_flags_override_config_file() {
    let dir = temp_dir("override");
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "dim = 64\nham = q\ngrid_np = 3\ngrid_nq = 3\n").unwrap();
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--dim",
        "32",
        "symbol",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("symbol.json")).unwrap()).unwrap();
    assert_eq!(json["dim"], 32); // flag wins
    assert_eq!(json["ham"], "q"); // file value survives
}

fn assert_identical(a: &Path, b: &Path) {
    let left = std::fs::read(a).unwrap();
    let right = std::fs::read(b).unwrap();
    assert_eq!(left, right, "{} differs from {}", a.display(), b.display());
}

#[test]
fn symbol_output_is_byte_deterministic_across_thread_counts() {
    let d1 = temp_dir("det1");
    let d2 = temp_dir("det2");
    let base = [
        "symbol",
        "--ham",
        "oscillator",
        "--grid",
        "7x7",
        "--dim",
        "64",
    ];
    let out = bin()
        .args(base)
        .args(["--out", d1.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin()
        .args(base)
        .args(["--out", d2.to_str().unwrap()])
        .env("EQUANT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_identical(&d1.join("symbol.csv"), &d2.join("symbol.csv"));
    assert_identical(&d1.join("symbol.json"), &d2.join("symbol.json"));
}

#[test]
fn metric_csv_has_expected_header_and_values() {
    let dir = temp_dir("metric");
    let out = run(&[
        "metric",
        "--family",
        "canonical",
        "--grid",
        "3x3",
        "--dim",
        "64",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("metric.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("p,q,g_pp,g_pq,g_qq,fd_error"));
    for line in lines {
        let gpp: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        let gqq: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(
            (gpp - 1.0).abs() < 1e-5 && (gqq - 1.0).abs() < 1e-5,
            "{line}"
        );
    }
}

#[test]
fn action_writes_trajectory_csv() {
    let dir = temp_dir("action");
    // the default dt keeps the time-differencing error under the 1e-5 gate
    let out = run(&[
        "action",
        "--ham",
        "oscillator",
        "--dim",
        "64",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("action.csv")).unwrap();
    assert!(csv.starts_with("t,p,q\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("action.json")).unwrap()).unwrap();
    assert!(json["pass"].as_bool().unwrap());
    assert!(json["difference"].as_f64().unwrap().abs() < 1e-5);
}

#[test]
fn symbol_oscillator_correction_is_half_hbar() {
    let dir = temp_dir("symosc");
    let out = run(&[
        "symbol",
        "--ham",
        "oscillator",
        "--hbar",
        "1",
        "--grid",
        "11x11",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("symbol.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let corr: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((corr - 0.5).abs() < 1e-8, "correction {corr} in {line}");
    }
}

#[test]
fn affine_metric_matches_poincare_scaling() {
    let dir = temp_dir("metaff");
    let out = run(&[
        "metric",
        "--family",
        "affine",
        "--grid",
        "3x3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("metric.json")).unwrap()).unwrap();
    assert!(json["pass"].as_bool().unwrap());
    assert!(json["max_deviation"].as_f64().unwrap() < 1e-3);
}

#[test]
fn failing_tolerance_exits_1() {
    let dir = temp_dir("fail");
    // an absurd tolerance forces the numeric-failure exit path
    let out = run(&[
        "metric",
        "--family",
        "canonical",
        "--grid",
        "3x3",
        "--dim",
        "64",
        "--tol-metric",
        "1e-18",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
