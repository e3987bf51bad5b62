use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gradlocus(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gradlocus"));
    cmd.args(args).env_remove("GRADLOCUS_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const MINKOWSKI: &str = r#"{
  "name": "mg",
  "dim": 2,
  "structure": { "kind": "pseudo_euclidean", "p": 1, "q": 1 },
  "f": "x1^2*x2 + sin(x1)",
  "F": ["2*x1*x2 + cos(x1)", "-(x1^2)"],
  "box": [[-2, 2], [-2, 2]],
  "rng_seed": 5
}"#;

const CIRCLE: &str = r#"{
  "name": "circle",
  "dim": 2,
  "structure": { "kind": "euclidean" },
  "f": "(x1^2 + x2^2)/2",
  "F": ["x1 + x2*(x1^2 + x2^2 - 1)", "x2 - x1*(x1^2 + x2^2 - 1)"],
  "n_seeds": 300
}"#;

#[test]
fn check_reports_exact_gradients_as_integrable() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "mg.json", MINKOWSKI);
    let out = gradlocus(&["check", "--scenario", &s, "--points", "50"], &[]);
    assert!(out.status.success());
    let r = json(&out.stdout);
    assert_eq!(r["verdict"], "integrable everywhere sampled");
    assert_eq!(r["n_points"], 50);
    for c in r["conditions"].as_array().unwrap() {
        assert!(c["max_residual"].as_f64().unwrap() <= 1e-8);
    }
    assert_eq!(r["probe"]["violations"], 0);
    assert_eq!(r["tolerances"]["integrable"], 1e-8);
}

#[test]
fn check_reports_the_circle_field_as_obstructed() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "c.json", CIRCLE);
    let r = json(&gradlocus(&["check", "--scenario", &s], &[]).stdout);
    assert!(r["conditions"][0]["max_residual"].as_f64().unwrap() > 1.0);
    assert!(r["gamma"]["nonzero_points"].as_u64().unwrap() > 0);
    assert!(r["verdict"].as_str().unwrap().starts_with("non-integrable"));
}

#[test]
fn locus_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "c.json", CIRCLE);
    let out_dir = dir.path().join("out");
    let out = gradlocus(
        &["locus", "--scenario", &s, "--out", out_dir.to_str().unwrap(), "--tol-rank", "1e-5"],
        &[("GRADLOCUS_THREADS", "2")],
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&std::fs::read(out_dir.join("summary.json")).unwrap());
    assert_eq!(summary, {
        let mut printed = json(&out.stdout);
        printed["timestamp"] = summary["timestamp"].clone();
        printed
    });
    assert_eq!(summary["uncovered_count"], 0);
    assert_eq!(summary["charts_used"], 2);
    assert_eq!(summary["chart_bound"], 2);
    assert_eq!(summary["tolerances"]["rank"], 1e-5);
    assert!(summary["dimension_caveat"].as_str().unwrap().contains("surrogate"));

    let csv = std::fs::read_to_string(out_dir.join("points.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x1,x2,phi_norm,gamma_value,gamma_scale,chart_mask,certified"));
    assert_eq!(lines.count() as u64, summary["sample_count"].as_u64().unwrap());

    let dim = json(&gradlocus(&["dimension", out_dir.join("points.csv").to_str().unwrap()], &[]).stdout);
    assert!((dim["estimate"].as_f64().unwrap() - 1.0).abs() < 0.15);

    let charts = gradlocus(
        &["charts", out_dir.join("points.csv").to_str().unwrap(), "--scenario", &s, "--tol-rank", "1e-5"],
        &[],
    );
    assert!(charts.status.success());
    let r = json(&charts.stdout);
    assert_eq!(r["changed_rows"], 0);
    assert_eq!(r["cover"]["charts_used"], 2);
}

#[test]
fn demo_minkowski_has_no_certified_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = gradlocus(&["demo", "minkowski-grad", "--out", dir.path().to_str().unwrap(), "--points", "100"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out.stdout)["certified_count"], 0);
    assert!(json(&out.stdout)["dimension_estimate"].is_null());
}

#[test]
fn errors_are_single_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let odd = write(
        dir.path(),
        "odd.json",
        r#"{"name":"o","dim":3,"structure":{"kind":"euclidean"},"f":"x1","F":["x1","x2","x3"]}"#,
    );
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["locus", "--scenario", &odd], "validation"),
        (vec!["demo", "torus"], "validation"),
        (vec!["check", "--scenario", "/nonexistent/s.json"], "io"),
    ];
    for (args, kind) in cases {
        let out = gradlocus(&args, &[]);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1);
        assert_eq!(json(err.as_bytes())["error"], kind);
    }
    let out = gradlocus(&["demo", "circle-m1", "--out", dir.path().to_str().unwrap()], &[("GRADLOCUS_THREADS", "0")]);
    assert_eq!(out.status.code(), Some(1));
}
