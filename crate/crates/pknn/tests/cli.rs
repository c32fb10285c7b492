//! End-to-end runs of the command-line binary: exit codes, config-file
//! resolution, and the train → eval round trip on synthetic data.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pknn"))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a 10-image, 4×4 synthetic IDX pair with labels 0/1.
fn write_synthetic_pair(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    let images = dir.join(format!("{stem}-images.idx"));
    let labels = dir.join(format!("{stem}-labels.idx"));

    let mut blob = 0x0000_0803u32.to_be_bytes().to_vec();
    blob.extend_from_slice(&10u32.to_be_bytes());
    blob.extend_from_slice(&4u32.to_be_bytes());
    blob.extend_from_slice(&4u32.to_be_bytes());
    for i in 0..10u8 {
        // Class 0 bright in the first half, class 1 in the second.
        for p in 0..16u8 {
            let bright = (i % 2 == 0) == (p < 8);
            blob.push(if bright { 200 } else { 10 });
        }
    }
    std::fs::write(&images, &blob).unwrap();

    let mut blob = 0x0000_0801u32.to_be_bytes().to_vec();
    blob.extend_from_slice(&10u32.to_be_bytes());
    blob.extend((0..10u8).map(|i| i % 2));
    std::fs::write(&labels, &blob).unwrap();

    (images, labels)
}

#[test]
fn audit_prints_table() {
    let out = bin()
        .args(["audit", "--hidden", "5", "--e", "8", "--w", "8", "--r", "8", "--acc", "32"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("hidden = 5"));
    assert!(text.contains("OVERFLOW"));
}

#[test]
fn audit_rejects_zero_accumulator() {
    let out = bin().args(["audit", "--hidden", "5", "--acc", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("acc"));
}

#[test]
fn audit_requires_hidden() {
    let out = bin().args(["audit"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("hidden"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = bin().args(["explode"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_requires_dataset_paths() {
    let out = bin().args(["train", "--arch", "16,8,2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("train-images"));
}

#[test]
fn train_with_missing_file_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "train",
            "--train-images", "nope.idx",
            "--train-labels", "nope.idx",
            "--val-images", "nope.idx",
            "--val-labels", "nope.idx",
            "--arch", "16,8,2",
            "--epochs", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (train_images, train_labels) = write_synthetic_pair(dir.path(), "train");
    let (val_images, val_labels) = write_synthetic_pair(dir.path(), "val");
    let model = dir.path().join("model.pknn");
    let metrics = dir.path().join("metrics.csv");

    let out = bin()
        .args([
            "train",
            "--train-images", train_images.to_str().unwrap(),
            "--train-labels", train_labels.to_str().unwrap(),
            "--val-images", val_images.to_str().unwrap(),
            "--val-labels", val_labels.to_str().unwrap(),
            "--arch", "16,8,2",
            "--epochs", "3",
            "--batch", "4",
            "--lr-inverse", "100",
            "--seed", "3",
            "--model-out", model.to_str().unwrap(),
            "--metrics-out", metrics.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "train failed: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("arch = 16,8,2"));
    assert!(text.contains("epochs = 3"));
    assert!(text.contains("mode = dfa"));

    let final_line = text
        .lines()
        .find(|l| l.starts_with("final_val_acc = "))
        .expect("missing final accuracy line");
    let train_acc = final_line.trim_start_matches("final_val_acc = ").to_string();

    let csv = std::fs::read_to_string(&metrics).unwrap();
    assert!(csv.starts_with("epoch,lr_inverse,train_loss,train_acc,val_acc,overflow_count"));
    assert_eq!(csv.lines().count(), 4);

    // Evaluating the saved model on the same validation files reproduces
    // the reported accuracy exactly.
    let out = bin()
        .args([
            "eval",
            "--model", model.to_str().unwrap(),
            "--images", val_images.to_str().unwrap(),
            "--labels", val_labels.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "eval failed: {}", stderr(&out));
    let eval_text = stdout(&out);
    let acc_line = eval_text
        .lines()
        .find(|l| l.starts_with("accuracy = "))
        .expect("missing accuracy line");
    assert_eq!(acc_line.trim_start_matches("accuracy = "), train_acc);
}

#[test]
fn eval_rejects_corrupt_model() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = write_synthetic_pair(dir.path(), "d");
    let model = dir.path().join("bad.pknn");
    std::fs::write(&model, b"not a model").unwrap();
    let out = bin()
        .args([
            "eval",
            "--model", model.to_str().unwrap(),
            "--images", images.to_str().unwrap(),
            "--labels", labels.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let (train_images, train_labels) = write_synthetic_pair(dir.path(), "train");
    let (val_images, val_labels) = write_synthetic_pair(dir.path(), "val");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# synthetic run\n\
             train-images = {}\n\
             train-labels = {}\n\
             val-images = {}\n\
             val-labels = {}\n\
             arch = 16,8,2\n\
             epochs = 5\n\
             batch = 4\n\
             lr-inverse = 100\n\
             model-out = {}\n\
             metrics-out = {}\n",
            train_images.display(),
            train_labels.display(),
            val_images.display(),
            val_labels.display(),
            dir.path().join("m.pknn").display(),
            dir.path().join("m.csv").display(),
        ),
    )
    .unwrap();

    let out = bin()
        .args(["train", "--config", cfg.to_str().unwrap(), "--epochs", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "train failed: {}", stderr(&out));
    let text = stdout(&out);
    // Flag beats the config file's epochs = 5.
    assert!(text.contains("epochs = 1"));
    assert!(text.contains("batch = 4"));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "zorps = 3\n").unwrap();
    let out = bin().args(["train", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("zorps"));
}

#[test]
fn data_dir_env_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let (_images, _labels) = write_synthetic_pair(dir.path(), "train");
    write_synthetic_pair(dir.path(), "val");

    let out = bin()
        .env("PKNN_DATA_DIR", dir.path())
        .args([
            "train",
            "--train-images", "train-images.idx",
            "--train-labels", "train-labels.idx",
            "--val-images", "val-images.idx",
            "--val-labels", "val-labels.idx",
            "--arch", "16,8,2",
            "--epochs", "1",
            "--batch", "4",
            "--model-out", dir.path().join("m.pknn").to_str().unwrap(),
            "--metrics-out", dir.path().join("m.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "train failed: {}", stderr(&out));
    assert!(stdout(&out).contains(dir.path().to_str().unwrap()));
}

#[test]
fn baseline_runs_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let (train_images, train_labels) = write_synthetic_pair(dir.path(), "train");
    let (val_images, val_labels) = write_synthetic_pair(dir.path(), "val");
    let metrics = dir.path().join("fp.csv");

    let out = bin()
        .args([
            "baseline",
            "--train-images", train_images.to_str().unwrap(),
            "--train-labels", train_labels.to_str().unwrap(),
            "--val-images", val_images.to_str().unwrap(),
            "--val-labels", val_labels.to_str().unwrap(),
            "--arch", "16,6,2",
            "--epochs", "2",
            "--batch", "5",
            "--metrics-out", metrics.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "baseline failed: {}", stderr(&out));
    let csv = std::fs::read_to_string(&metrics).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
