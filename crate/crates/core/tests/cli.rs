use std::path::PathBuf;
use std::process::{Command, Output};

use fefwork::report::REPORT_SCHEMA;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn fefwork(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fefwork"));
    for (key, _) in std::env::vars() {
        if key.starts_with("FEFWORK_") {
            cmd.env_remove(key);
        }
    }
    cmd.args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn report_validates_against_schema() {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    for name in ["bell.json", "isotropic.json", "mixed.json", "haar.json"] {
        let out = fefwork(&["report", data(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let doc = json(&out);
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
}

#[test]
fn bell_report_values() {
    let doc = json(&fefwork(&["report", data("bell.json").to_str().unwrap()]));
    assert!((doc["fef"]["value"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((doc["q"]["hMin"]["value"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    assert_eq!(doc["eq4_erasureCostUpper"]["paper_eq"], "eq.4");
}

#[test]
fn output_is_reproducible() {
    let mixed = data("mixed.json");
    let args = ["--seed", "7", "report", mixed.to_str().unwrap()];
    let first = fefwork(&args);
    let second = fefwork(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);

    let args = ["--seed", "3", "certify", "--d", "2", "--samples", "12"];
    assert_eq!(fefwork(&args).stdout, fefwork(&args).stdout);
}

#[test]
fn environment_sets_defaults_and_flags_win() {
    let path = data("bell.json");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fefwork"));
    let out = cmd.env("FEFWORK_KBT", "2.5").args(["report", path.to_str().unwrap()]).output().unwrap();
    assert!((json(&out)["kbt"]["value"].as_f64().unwrap() - 2.5).abs() < 1e-15);

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fefwork"));
    let out = cmd
        .env("FEFWORK_KBT", "2.5")
        .args(["--kbt", "0.5", "report", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!((json(&out)["kbt"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_two_without_stdout() {
    let bell = data("bell.json");
    let mixed = data("mixed.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["certify", "--d", "2", "--samples", "0"],
        vec!["isotropic-scan", "--d", "2", "--steps", "0"],
        vec!["--epsilon", "0.7", "report", bell.to_str().unwrap()],
        vec!["--kbt", "-1", "report", bell.to_str().unwrap()],
        vec!["report", "/nonexistent/state.json"],
        vec!["pipeline", "--figure", "2", mixed.to_str().unwrap()],
        vec!["pipeline", "--figure", "3", bell.to_str().unwrap()],
        vec!["bogus"],
    ];
    for args in cases {
        let out = fefwork(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn malformed_state_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("truncated.json", "{\"d\": 2, \"matrix\": ["),
        ("trace.json", "{\"d\": 1, \"matrix\": [[2.0, 0.0]]}"),
        ("shape.json", "{\"d\": 2, \"matrix\": [[1.0, 0.0]]}"),
        ("family.json", "{\"family\": \"werner\", \"d\": 2}"),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = fefwork(&["report", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
    }
}

#[test]
fn figure_pipelines_reach_expected_totals() {
    let doc = json(&fefwork(&["pipeline", "--figure", "1", data("bell.json").to_str().unwrap()]));
    let total = doc["total"]["value"].as_f64().unwrap();
    assert!((total - 4f64.ln()).abs() < 1e-12);

    let doc = json(&fefwork(&["pipeline", "--figure", "2", data("haar.json").to_str().unwrap()]));
    let total = doc["total"]["value"].as_f64().unwrap();
    assert!((total - 4f64.ln()).abs() < 1e-9);

    let out = fefwork(&["pipeline", "--process", data("process.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["successProb"]["value"].as_f64().unwrap() - 0.9).abs() < 1e-15);
}

#[test]
fn scan_csv_shape() {
    let out = fefwork(&["isotropic-scan", "--d", "3", "--steps", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 6);
    let width = rows[0].split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == width));
}

#[test]
fn certify_passes_on_small_sweep() {
    let out = fefwork(&["certify", "--d", "2", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let doc = json(&out);
    assert_eq!(doc["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn twirl_and_minentropy_commands() {
    let doc = json(&fefwork(&["twirl", data("isotropic.json").to_str().unwrap()]));
    assert!(doc.is_object());
    let out = fefwork(&["--format", "table", "minentropy", data("bell.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stdout.is_empty());
}
