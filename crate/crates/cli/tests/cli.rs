mod common;

use std::fs;
use std::path::Path;

use common::{body, history, punn, punn_ok};
use punn_core::dataset::{csv_header, load_dataset};
use punn_core::netmodel::{evaluate, reference_punn};
use punn_core::{FeatureSchema, RangeCheck, N_INPUTS};
use tempfile::tempdir;

fn small_set(dir: &Path) {
    punn_ok(dir, &["gen", "--out", "small.csv", "--count", "200", "--seed", "3"]);
}

#[test]
fn noiseless_reference_data_scores_zero() {
    let dir = tempdir().unwrap();
    punn_ok(dir.path(), &["gen", "--seed", "7", "--noise", "0", "--out", "clean.csv"]);
    let stdout = punn_ok(dir.path(), &["eval", "--model", "reference", "--data", "clean.csv"]);
    let row = stdout.lines().find(|l| l.starts_with("punn")).unwrap();
    assert_eq!(row.split_whitespace().nth(1), Some("0.0000"));

    let data = load_dataset(dir.path().join("clean.csv"), &FeatureSchema::standard(), RangeCheck::Fail).unwrap();
    assert_eq!(data.len(), 3712);
    assert_eq!(evaluate(&reference_punn(), &data).unwrap().metrics.global_mse, 0.0);
}

#[test]
fn desk_scale_training_reports_two_run_statistics() {
    let dir = tempdir().unwrap();
    small_set(dir.path());
    let stdout = punn_ok(
        dir.path(),
        &["train", "--data", "small.csv", "--basis", "punn", "--mode", "simple", "--runs", "2", "--pop", "50", "--out-dir", "out"],
    );
    assert!(stdout.contains("(2 runs, test set)"));
    for label in ["Mean", "SD", "Best"] {
        assert!(stdout.lines().any(|l| l.starts_with(label)), "missing {label} row");
    }
    let out = dir.path().join("out");
    let h = history(&out.join("history.csv"));
    assert_eq!(h.len(), 2 * 201);
    let model = fs::read_to_string(out.join("best_model.json")).unwrap();
    let reloaded = punn_core::netmodel::deserialize(&model).unwrap();
    assert!(reloaded.n_hidden() >= 1);
}

#[test]
fn predict_at_range_midpoints_is_finite() {
    let dir = tempdir().unwrap();
    let schema = FeatureSchema::standard();
    let header = csv_header(&schema)[..N_INPUTS].join(",");
    let row: Vec<String> = (0..N_INPUTS).map(|i| schema.ranges().midpoint(i).to_string()).collect();
    fs::write(dir.path().join("mid.csv"), format!("{header}\n{}\n", row.join(","))).unwrap();
    let stdout = punn_ok(dir.path(), &["predict", "--model", "reference", "--input", "mid.csv"]);
    let text = body(&stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with("LAEQ,L,R,SA"));
    let cells: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cells.len(), N_INPUTS + 4);
    assert!(cells[N_INPUTS..].iter().all(|v| v.is_finite()));
}

#[test]
fn identical_commands_give_identical_artifacts() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let snapshot = |files: &[&str]| -> Vec<Vec<u8>> { files.iter().map(|f| fs::read(d.join(f)).unwrap()).collect() };

    let gen = ["gen", "--out", "g.csv", "--count", "150", "--seed", "11"];
    punn_ok(d, &gen);
    let first = snapshot(&["g.csv"]);
    punn_ok(d, &gen);
    assert_eq!(first, snapshot(&["g.csv"]));

    let train = ["train", "--data", "g.csv", "--runs", "2", "--pop", "30", "--gens", "25", "--out-dir", "t"];
    let files = ["t/best_model.json", "t/history.csv", "t/report.txt"];
    punn_ok(d, &train);
    let first = snapshot(&files);
    punn_ok(d, &["--threads", "1", "train", "--data", "g.csv", "--runs", "2", "--pop", "30", "--gens", "25", "--out-dir", "t"]);
    let second = snapshot(&files);
    // The recorded command line differs by the thread flag only.
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(body(&String::from_utf8_lossy(a)), body(&String::from_utf8_lossy(b)));
    }
    punn_ok(d, &train);
    assert_eq!(first, snapshot(&files));

    let analyze = ["analyze", "--model", "t/best_model.json", "--data", "g.csv", "--surface", "p,V50", "--grid", "5x7", "--out", "s.csv", "--influence", "i.csv"];
    punn_ok(d, &analyze);
    let first = snapshot(&["s.csv", "i.csv"]);
    punn_ok(d, &analyze);
    assert_eq!(first, snapshot(&["s.csv", "i.csv"]));
}

#[test]
fn every_artifact_starts_with_provenance() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    small_set(d);
    punn_ok(d, &["train", "--data", "small.csv", "--runs", "1", "--pop", "20", "--gens", "5", "--seed", "9", "--out-dir", "t"]);
    punn_ok(d, &["eval", "--model", "t/best_model.json", "--data", "small.csv", "--out", "e.txt"]);
    punn_ok(d, &["baseline", "--data", "small.csv", "--kind", "ridge", "--lambda", "0.01", "--out", "b.txt"]);
    punn_ok(d, &["analyze", "--model", "reference", "--influence", "i.csv", "--surface", "X15,X26", "--grid", "3x3", "--out", "s.csv"]);
    for f in ["small.csv", "t/best_model.json", "t/history.csv", "t/report.txt", "e.txt", "b.txt", "i.csv", "s.csv"] {
        let text = fs::read_to_string(d.join(f)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# punn "), "{f}");
        assert!(lines.next().unwrap().starts_with("# command: punn "), "{f}");
    }
    let report = fs::read_to_string(d.join("t/report.txt")).unwrap();
    assert!(report.contains("# seed: 9"));
    assert!(report.contains("# config: population = 20"));
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    small_set(d);
    fs::write(d.join("ea.cfg"), "# desk run\nruns = 3\npopulation = 20\ngenerations = 4\n").unwrap();
    let out = punn(d, &["train", "--data", "small.csv", "--config", "ea.cfg", "--runs", "1", "--out-dir", "t"]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config: runs = 1"));
    assert!(stderr.contains("config: population = 20"));
    assert!(stderr.contains("config: generations = 4"));
    assert!(stderr.contains("config: max_nodes = 3"));

    let out = punn(d, &["train", "--data", "small.csv", "--preset", "desk", "--gens", "2", "--out-dir", "t"]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config: runs = 3") && stderr.contains("config: population = 100"));

    fs::write(d.join("bad.cfg"), "populaton = 3\n").unwrap();
    let out = punn(d, &["train", "--data", "small.csv", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempdir().unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_punn"))
        .args(["gen", "--out", "g.csv", "--count", "5"])
        .current_dir(dir.path())
        .env("PUNN_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(text.contains("# seed: 42"));
}

#[test]
fn exit_codes_and_single_line_diagnostics() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    small_set(d);

    assert_eq!(punn(d, &["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(punn(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(punn(d, &["--help"]).status.code(), Some(0));

    let out = punn(d, &["eval", "--model", "reference", "--data", "missing.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let diag: Vec<&str> = stderr.lines().filter(|l| l.starts_with("punn: error")).collect();
    assert_eq!(diag.len(), 1);

    let text = fs::read_to_string(d.join("small.csv")).unwrap();
    let trimmed: String = text
        .lines()
        .map(|l| if l.starts_with('#') { l.to_string() } else { l.rsplit_once(',').unwrap().0.to_string() })
        .map(|l| l + "\n")
        .collect();
    fs::write(d.join("no_sa.csv"), trimmed).unwrap();
    assert_eq!(punn(d, &["eval", "--model", "reference", "--data", "no_sa.csv"]).status.code(), Some(3));

    fs::write(d.join("broken.json"), "{\"format\": \"punn-model/99\"}").unwrap();
    assert_eq!(punn(d, &["eval", "--model", "broken.json", "--data", "small.csv"]).status.code(), Some(3));

    let out = punn(d, &["analyze", "--model", "reference", "--surface", "p,V50", "--range-a", "0:40"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("X3 (p)"));
}

#[test]
fn failures_leave_no_partial_output() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let schema = FeatureSchema::standard();
    let header = csv_header(&schema)[..N_INPUTS].join(",");
    let mut good: Vec<String> = (0..N_INPUTS).map(|i| schema.ranges().midpoint(i).to_string()).collect();
    let ok_row = good.join(",");
    good[2] = "-100".into();
    fs::write(d.join("in.csv"), format!("{header}\n{ok_row}\n{}\n", good.join(","))).unwrap();

    let out = punn(d, &["predict", "--model", "reference", "--input", "in.csv", "--out", "pred.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!d.join("pred.csv").exists());

    fs::write(d.join("pred.csv"), "previous\n").unwrap();
    let out = punn(d, &["predict", "--model", "reference", "--input", "in.csv", "--out", "pred.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(fs::read_to_string(d.join("pred.csv")).unwrap(), "previous\n");

    let mut names: Vec<String> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names, ["in.csv", "pred.csv"]);
}

#[test]
fn baseline_report_lists_all_four_models() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    small_set(d);
    let stdout = punn_ok(d, &["baseline", "--data", "small.csv", "--lambda", "0.001"]);
    for label in ["LinearReg", "Ridge", "Lasso", "ElasticNet"] {
        assert!(stdout.lines().any(|l| l.starts_with(label)), "missing {label}");
    }
    let ols = stdout.lines().find(|l| l.starts_with("LinearReg")).unwrap();
    assert_eq!(ols.split_whitespace().last(), Some("164.00"));
}
