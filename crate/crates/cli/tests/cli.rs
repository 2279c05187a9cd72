//! End-to-end tests of the `evt` binary: exit codes, file formats, schema
//! stability, and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use evt_core::estimators::{stat_vector, WindowConfig};
use evt_core::models::{builtin, Builtin, BuiltinParams, SampleBatch};

fn evt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_then_estimate_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("e.json");

    let out = evt(&[
        "simulate", "--model", "pareto", "--gamma", "2", "--n", "1000", "--seed", "7", "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = evt(&[
        "estimate", "--input", csv.to_str().unwrap(), "--k", "100", "--ell", "5", "--nu", "0.3",
        "--out", json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Library-computed reference through the same values-from-file path.
    let model = builtin(
        Builtin::Pareto,
        BuiltinParams {
            gamma: 2.0,
            ..Default::default()
        },
    )
    .unwrap();
    let batch = model.draw(1000, 7).unwrap();
    let reference = stat_vector(
        &SampleBatch::from_values(batch.x_sorted()).unwrap(),
        &WindowConfig::new(100, 5, 0.3),
    )
    .unwrap();

    let doc = read_json(&json);
    for (key, want) in [
        ("t1", reference.t1),
        ("t2", reference.t2),
        ("t3", reference.t3),
        ("t4", reference.t4),
        ("t5", reference.t5),
        ("t6", reference.t6),
        ("t7", reference.t7),
        ("t8", reference.t8),
        ("a1", reference.a1),
    ] {
        let got = doc[key].as_f64().unwrap();
        assert_eq!(got.to_bits(), want.to_bits(), "{key}: {got} vs {want}");
    }
    assert_eq!(doc["n"].as_u64(), Some(1000));
    assert_eq!(doc["k"].as_u64(), Some(100));
    assert_eq!(doc["ell"].as_u64(), Some(5));
    assert!(doc["t9"].is_null());
    assert!(doc["manifest"]["config"]["k"].as_u64() == Some(100));
}

#[test]
fn estimate_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("e.json");
    evt(&["simulate", "--n", "200", "--seed", "3", "--out", csv.to_str().unwrap()]);
    let out = evt(&[
        "estimate", "--input", csv.to_str().unwrap(), "--k", "40", "--ell", "4", "--out",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc = read_json(&json);
    let mut keys: Vec<&str> = doc.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        vec!["a1", "ell", "k", "manifest", "n", "nu", "t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9"]
    );
    let man = doc["manifest"].as_object().unwrap();
    for key in ["command", "version", "seed", "config", "started_at", "finished_at", "output_paths"] {
        assert!(man.contains_key(key), "manifest missing {key}");
    }
}

#[test]
fn estimate_rejects_inverted_window() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    evt(&["simulate", "--n", "100", "--seed", "1", "--out", csv.to_str().unwrap()]);
    let out = evt(&[
        "estimate", "--input", csv.to_str().unwrap(), "--k", "5", "--ell", "9",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ell"), "stderr: {err}");
}

#[test]
fn inputs_below_one_are_rejected_naming_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "# comment\nx\n2.5\n0.5\n3.5\n").unwrap();
    let out = evt(&["estimate", "--input", csv.to_str().unwrap(), "--k", "2", "--ell", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":4:"), "stderr should cite line 4: {err}");
    assert!(err.contains("X >= 1"), "stderr: {err}");
}

#[test]
fn non_numeric_lines_are_rejected_naming_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "2.5\npotato\n").unwrap();
    let out = evt(&["detect", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":2:"), "stderr: {err}");
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = evt(&["simulate", "--n", "10", "--frobnicate", "1", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_is_reproducible_and_exits_zero_on_pass() {
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    let args = |out: &Path| {
        vec![
            "verify".to_string(),
            "--theorem".into(),
            "T3.2".into(),
            "--n".into(),
            "8000".into(),
            "--reps".into(),
            "400".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let o1 = Command::new(env!("CARGO_BIN_EXE_evt"))
        .args(args(&r1))
        .output()
        .unwrap();
    assert_eq!(o1.status.code(), Some(0), "{}", String::from_utf8_lossy(&o1.stdout));
    let o2 = Command::new(env!("CARGO_BIN_EXE_evt"))
        .args(args(&r2))
        .output()
        .unwrap();
    assert_eq!(o2.status.code(), Some(0));

    let mut d1 = read_json(&r1)["report"].clone();
    let mut d2 = read_json(&r2)["report"].clone();
    d1.as_object_mut().unwrap().remove("wall_clock_ms");
    d2.as_object_mut().unwrap().remove("wall_clock_ms");
    assert_eq!(d1, d2, "verify runs must reproduce bitwise");

    let table = String::from_utf8_lossy(&o1.stdout);
    assert!(table.contains("VERDICT: PASS"), "{table}");
}

#[test]
fn verify_unknown_target_is_usage_error() {
    let out = evt(&["verify", "--theorem", "T99"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_data_lines_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    evt(&["simulate", "--n", "100", "--seed", "9", "--out", a.to_str().unwrap()]);
    evt(&["simulate", "--n", "100", "--seed", "9", "--out", b.to_str().unwrap()]);
    let data = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|s| s.to_string())
            .collect()
    };
    assert_eq!(data(&a), data(&b));
}

#[test]
fn detect_labels_a_heavy_tail_sample() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("d.json");
    evt(&[
        "simulate", "--model", "pareto", "--gamma", "1", "--n", "30000", "--seed", "2", "--out",
        csv.to_str().unwrap(),
    ]);
    let out = evt(&[
        "detect", "--input", csv.to_str().unwrap(), "--out", json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&json);
    assert_eq!(doc["result"]["domain_label"]["domain"], "frechet");
    assert!(doc["result"]["diagnostics"]["t2"].is_f64());
    assert!(doc["manifest"]["config"]["alpha"].is_f64());
}
