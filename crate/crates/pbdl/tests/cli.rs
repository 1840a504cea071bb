//! End-to-end tests of the command line interface.

use std::io::Write as _;
use std::process::Command;

use pbdl::MaxAffineModel;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pbdl"))
}

fn toy_csv() -> tempfile::NamedTempFile {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "x,y,class").unwrap();
    for i in 0..8 {
        let t = 0.1 * i as f64;
        writeln!(file, "{t},{t},a").unwrap();
    }
    for i in 0..8 {
        let t = 3.0 + 0.1 * i as f64;
        writeln!(file, "{t},{t},b").unwrap();
    }
    file
}

#[test]
fn train_writes_loadable_model() {
    let csv = toy_csv();
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    let out = bin()
        .args(["train", "--data"])
        .arg(csv.path())
        .args(["--triplets", "60", "--lambda", "0.01", "--seed", "3", "--output"])
        .arg(&model_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let model = MaxAffineModel::from_json(&std::fs::read_to_string(&model_path).unwrap()).unwrap();
    assert_eq!(model.dim, 2);

    // The learned divergence scores the toy fixture perfectly.
    let eval = bin()
        .args(["eval", "--data"])
        .arg(csv.path())
        .args(["--model"])
        .arg(&model_path)
        .output()
        .unwrap();
    assert!(eval.status.success());
    let report: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    let metrics = &report["metrics"];
    for key in ["rand_index", "purity", "auc", "average_precision"] {
        let v = metrics[key].as_f64().unwrap();
        assert!(v > 0.999, "{key} = {v}");
    }
    assert!(report["generated_at"].as_u64().unwrap() > 0);
}

#[test]
fn bounds_reports_worked_example() {
    let out = bin()
        .args([
            "bounds", "--beta", "2", "--radius", "1", "--k", "4", "--dim", "1", "--lipschitz",
            "1", "--m", "100",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["bounds"]["value_bound"].as_f64().unwrap(), 0.5);
}

#[test]
fn bounds_check_holds_for_squared_norm() {
    let out = bin()
        .args([
            "bounds", "--beta", "4", "--radius", "1", "--k", "4", "--dim", "2", "--lipschitz",
            "1", "--m", "100", "--check",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["check"]["holds"].as_bool().unwrap(), true);
}

#[test]
fn partition_hand_trace() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "x,class").unwrap();
    for v in [0.0, 1.0, 2.0, 10.0] {
        writeln!(file, "{v},a").unwrap();
    }
    let out = bin()
        .args(["partition", "--data"])
        .arg(file.path())
        .args(["--k", "2", "--seed", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["max_radius"].as_f64().unwrap(), 2.0);
}

#[test]
fn synth_smoke() {
    let out = bin()
        .args([
            "synth", "--kind", "squared_euclidean", "--schedule", "20", "--seeds", "2",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pt = &report["curve"]["points"][0];
    assert_eq!(pt["m"].as_u64().unwrap(), 20);
    assert!(pt["pbdl_mse"]["mean"].as_f64().unwrap().is_finite());
}

#[test]
fn operational_errors_exit_one() {
    let out = bin()
        .args(["train", "--data", "/nonexistent/file.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let csv = toy_csv();
    let out = bin()
        .args(["train", "--data"])
        .arg(csv.path())
        .args(["--label", "missing_column"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let out = bin().args(["train", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_dir_env_var_resolves_relative_paths() {
    let csv = toy_csv();
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["partition", "--data"])
        .arg(csv.path())
        .args(["--k", "2", "--output", "part.json"])
        .env("PBDL_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("part.json").exists());
}
