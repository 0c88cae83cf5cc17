//! End-to-end runs of the `walrasian` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use walrasian::economy::{Consumer, ExchangeEconomy, Utility};

fn walrasian(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walrasian")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scarf_simplex_converges() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    let out = walrasian(&[
        "scarf",
        "--space",
        "simplex",
        "--eta",
        "0.05",
        "--iters",
        "5000",
        "--eps",
        "1e-3",
        "--report",
        path_str(&report),
        "--trace",
        path_str(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&report);
    for p in floats(&json["best_prices"]) {
        assert!((p - 1.0 / 3.0).abs() <= 1e-3);
    }
    assert_eq!(json["converged"], Value::Bool(true));
    for key in ["config_echo", "best_iter", "normalized_equilibrium", "pathwise_L_max", "rate_slope"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    for key in ["eps_feasibility", "walras_residual", "gap"] {
        assert!(json["certificate"][key].is_number(), "missing certificate.{key}");
    }
    let csv = fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "iter,gap,feas_violation,walras_residual,breg_progress,pathwise_L,elapsed_s");
    assert_eq!(lines.count(), 5000);
}

#[test]
fn rotation_extragradient_reaches_origin() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("rot.json");
    let out = walrasian(&["vi-example", "rotation", "--eta", "0.25", "--iters", "200", "--report", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&report);
    assert!(json["final_norm"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn rotation_gradient_diverges() {
    let out = walrasian(&["vi-example", "rotation", "--method", "gradient"]);
    assert_eq!(out.status.code(), Some(2));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["final_norm"].as_f64().unwrap() > json["initial_norm"].as_f64().unwrap());
}

#[test]
fn trace_rows_follow_record_every_or_stop_gap() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let report = dir.path().join("r.json");
    let out = walrasian(&[
        "scarf",
        "--space",
        "simplex",
        "--eta",
        "0.05",
        "--iters",
        "1000",
        "--record-every",
        "7",
        "--trace",
        path_str(&trace),
        "--report",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&trace).unwrap().lines().count() - 1, 1000usize.div_ceil(7));

    let out = walrasian(&[
        "scarf",
        "--space",
        "simplex",
        "--eta",
        "0.05",
        "--iters",
        "5000",
        "--stop-gap",
        "1e-4",
        "--trace",
        path_str(&trace),
        "--report",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(&trace).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() < 5000);
    let last_gap: f64 = rows.last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last_gap <= 1e-4);
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let out = walrasian(&[
        "economy",
        "--n-consumers",
        "6",
        "--n-goods",
        "4",
        "--mix",
        "uniform",
        "--seed",
        "5",
        "--kernel",
        "entropy",
        "--iters",
        "500",
        "--report",
        path_str(&first),
    ]);
    assert_ne!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let out = walrasian(&["--config", path_str(&first)]);
    assert_ne!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    // the echoed config writes to the same report path, so rerun from a copy
    let json = read_json(&first);
    let mut echo = json["config_echo"].clone();
    echo["report"] = Value::String(second.to_str().unwrap().to_string());
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, echo.to_string()).unwrap();
    let out = walrasian(&["--config", path_str(&cfg)]);
    assert_ne!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&first)["best_prices"], read_json(&second)["best_prices"]);
}

#[test]
fn cobb_douglas_sweep_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = walrasian(&[
        "sweep",
        "--n-consumers",
        "20",
        "--n-goods",
        "20",
        "--mix",
        "cobb_douglas",
        "--kernel",
        "entropy",
        "--eps",
        "1e-3",
        "--stop-gap",
        "1e-3",
        "--iters",
        "20000",
        "--seeds",
        "1,2,3,4,5,6,7,8,9,10",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "seed,n_consumers,n_goods,converged,iters_to_eps,pathwise_L_max");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("true")));
    for s in 1..=10 {
        assert!(dir.path().join(format!("seed_{s}.json")).exists());
    }
}

#[test]
fn empty_sweep_is_an_error() {
    let out = walrasian(&["sweep", "--n-consumers", "3", "--n-goods", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim().lines().count(), 1);
}

#[test]
fn mixed_ces_sweep_has_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = walrasian(&[
        "sweep",
        "--n-consumers",
        "8",
        "--n-goods",
        "3",
        "--mix",
        "ces_substitutes=0.5,ces_complements=0.5",
        "--iters",
        "300",
        "--seeds",
        "3,1,4,15,9",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, 5);
}

#[test]
fn bad_configs_fail_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"command": "scarf", "horizon": 0}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--config", path_str(&bad)],
        vec!["--config", "/nonexistent/config.json"],
        vec!["scarf", "--iters", "0"],
        vec!["scarf", "--eta", "-1"],
        vec!["scarf", "--kernel", "cubic"],
        vec!["economy", "--n-goods", "3"],
    ];
    for args in cases {
        let out = walrasian(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.trim().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn economy_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let economy = ExchangeEconomy::new(vec![
        Consumer::new(Utility::CobbDouglas, vec![1.0, 1.0], vec![2.0, 0.0]).unwrap(),
        Consumer::new(Utility::CobbDouglas, vec![1.0, 1.0], vec![0.0, 2.0]).unwrap(),
    ])
    .unwrap();
    let file = dir.path().join("economy.json");
    fs::write(&file, serde_json::to_string(&economy.to_spec()).unwrap()).unwrap();
    let report = dir.path().join("r.json");
    let out = walrasian(&[
        "economy",
        "--economy-file",
        path_str(&file),
        "--space",
        "simplex",
        "--eta",
        "0.05",
        "--iters",
        "2000",
        "--report",
        path_str(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for p in floats(&read_json(&report)["best_prices"]) {
        assert!((p - 0.5).abs() <= 1e-3);
    }
}
