use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn invpress(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invpress"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    invpress(&args)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn m3_estimate_writes_all_files() {
    let out = tempfile::tempdir().unwrap();
    let o = run("estimate", &configs().join("m3.json"), out.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.path().join("report.json"));
    let v = report["result"]["value"].as_f64().unwrap();
    assert!((v - 0.5).abs() <= 0.1);
    let csv = std::fs::read_to_string(out.path().join("per_n.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("n,a_lower,a_upper,exact,log_a_over_n")
    );
    assert_eq!(csv.lines().count(), 9);
    let manifest = read_json(&out.path().join("manifest.json"));
    assert_eq!(manifest["config_hash"], report["config_hash"]);
    assert_eq!(manifest["exhaustive"], true);
    assert_eq!(manifest["consumed"].as_array().unwrap().len(), 8);
}

#[test]
fn reports_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("m3.json");
    assert!(run("estimate", &cfg, a.path(), &[]).status.success());
    assert!(run("estimate", &cfg, b.path(), &["--threads", "1"])
        .status
        .success());
    for f in ["report.json", "per_n.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_hash_ignores_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = write_config(
        dir.path(),
        "a.json",
        r#"{"system": {"kind": "m3"}, "n_max": 4, "weight": {"kind": "table", "values": [1, 0]}}"#,
    );
    let c2 = write_config(
        dir.path(),
        "b.json",
        r#"{"weight": {"values": [1, 0], "kind": "table"}, "n_max": 4, "system": {"kind": "m3"}}"#,
    );
    let (o1, o2) = (dir.path().join("o1"), dir.path().join("o2"));
    assert!(run("estimate", &c1, &o1, &[]).status.success());
    assert!(run("estimate", &c2, &o2, &[]).status.success());
    let h1 = read_json(&o1.join("manifest.json"))["config_hash"].clone();
    let h2 = read_json(&o2.join("manifest.json"))["config_hash"].clone();
    assert_eq!(h1, h2);
}

#[test]
fn inverted_region_is_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"system": {"kind": "affine", "a": [[2]], "b": [[1]],
            "alphabet": {"kind": "equispaced", "count": 3, "lo": -1, "hi": 1},
            "region": [[0.9, -0.9]], "cells": [16]}}"#,
    );
    let out = dir.path().join("out");
    let o = run("estimate", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("region"));
    assert!(!out.exists());
}

#[test]
fn unknown_field_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"system": {"kind": "m3"}, "horizon": 3}"#,
    );
    let o = run("estimate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn infeasible_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inf.json",
        r#"{"system": {"kind": "table", "table": [[null, null], [1, 0]], "interior": [true, true]}, "n_max": 3}"#,
    );
    let out = dir.path().join("out");
    let o = run("estimate", &cfg, &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.join("report.json").exists());
}

#[test]
fn linear_formula_prints_value() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        "linear-formula",
        &configs().join("linear_formula.json"),
        out.path(),
        &[],
    );
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1.0");
}

#[test]
fn doubling_estimate_and_entropy_near_log2() {
    let cfg = configs().join("doubling.json");
    for cmd in ["estimate", "entropy"] {
        let out = tempfile::tempdir().unwrap();
        let o = run(cmd, &cfg, out.path(), &[]);
        assert!(o.status.success(), "{cmd}");
        let v = read_json(&out.path().join("report.json"))["result"]["value"]
            .as_f64()
            .unwrap();
        assert!((v - std::f64::consts::LN_2).abs() <= 0.15, "{cmd}: {v}");
    }
}

#[test]
fn alphabet_sweep_is_non_increasing_per_n() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        "sweep",
        &configs().join("sweep_alphabet.json"),
        out.path(),
        &[],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.path().join("per_n.csv")).unwrap();
    let mut rows: Vec<(usize, usize, f64, bool)> = Vec::new();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        rows.push((
            f[0].parse().unwrap(),
            f[1].parse().unwrap(),
            f[3].parse().unwrap(),
            f[4] == "true",
        ));
    }
    let values = [3, 5, 9, 17];
    for w in values.windows(2) {
        for n in 2..=10 {
            let get = |k: usize| *rows.iter().find(|r| r.0 == k && r.1 == n).unwrap();
            let (coarse, fine) = (get(w[0]), get(w[1]));
            assert!(coarse.3 && fine.3);
            assert!(
                fine.2 <= coarse.2 * (1.0 + 1e-12),
                "n={n}: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn budget_override_is_recorded() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        "estimate",
        &configs().join("m3.json"),
        out.path(),
        &["--budget-nodes", "12345"],
    );
    assert!(o.status.success());
    let manifest = read_json(&out.path().join("manifest.json"));
    assert_eq!(manifest["budgets"]["node_budget"], 12345);
}

#[test]
fn feedback_and_properties_commands() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        "feedback",
        &configs().join("feedback_m3.json"),
        out.path(),
        &[],
    );
    assert!(o.status.success());
    let v = read_json(&out.path().join("report.json"))["result"]["value"]
        .as_f64()
        .unwrap();
    assert!((v - 0.5).abs() <= 0.15);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.json",
        r#"{"properties": {"random_fixtures": 3, "seed": 5, "n_max": 4}}"#,
    );
    let o = run("properties", &cfg, &dir.path().join("out"), &[]);
    assert!(o.status.success());
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["result"]["failed"], 0);
    let csv = std::fs::read_to_string(dir.path().join("out/per_n.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("property,fixture,status,checks"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(invpress(&["bogus"]).status.code(), Some(1));
    assert_eq!(invpress(&["estimate"]).status.code(), Some(1));
    assert!(invpress(&["--help"]).status.success());
}
