use std::path::Path;
use std::process::{Command, Output};

fn j4reg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_j4reg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_lines(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("every stdout line is JSON"))
        .collect()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

/// Writes a small noiseless `z = 3a - b` table and returns its path.
fn linear_csv(dir: &Path) -> std::path::PathBuf {
    let mut text = String::from("a,b,z\n");
    for i in 0..60 {
        let a = (i as f64 * 0.37).sin() * 2.0;
        let b = (i as f64 * 0.11).cos();
        text.push_str(&format!("{a},{b},{}\n", 3.0 * a - b));
    }
    let path = dir.join("lin.csv");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn synth_writes_only_inside_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = j4reg(
        dir.path(),
        &["synth", "--function", "square", "--samples", "50", "--out-dir", "o", "--seed", "3"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files_in(dir.path()), vec!["o"]);
    assert_eq!(files_in(&dir.path().join("o")), vec!["synth.csv"]);
    let text = std::fs::read_to_string(dir.path().join("o/synth.csv")).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert_eq!(stdout_lines(&out)[0]["seed"], 3);
}

#[test]
fn output_name_cannot_escape_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = j4reg(
        dir.path(),
        &["synth", "--function", "linear", "--out-dir", "o", "--output", "../escape.csv"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("escape.csv").exists());
}

#[test]
fn exit_codes_for_bad_config_and_bad_data() {
    let dir = tempfile::tempdir().unwrap();
    // unknown flag
    assert_eq!(j4reg(dir.path(), &["solve", "--bogus"]).status.code(), Some(2));
    // out-of-range value
    let csv = linear_csv(dir.path());
    let csv = csv.to_str().unwrap();
    assert_eq!(j4reg(dir.path(), &["solve", "--data", csv, "--c", "-1"]).status.code(), Some(2));
    // missing file
    let out = j4reg(dir.path(), &["regressability", "--data", "nope.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    // non-numeric cell
    std::fs::write(dir.path().join("bad.csv"), "a,z\n1,2\nx,3\n").unwrap();
    assert_eq!(j4reg(dir.path(), &["transform", "--data", "bad.csv"]).status.code(), Some(3));
    // unknown target column
    assert_eq!(
        j4reg(dir.path(), &["transform", "--data", csv, "--target", "q"]).status.code(),
        Some(3)
    );
}

#[test]
fn solve_reports_then_exits_4_when_budget_runs_out() {
    let dir = tempfile::tempdir().unwrap();
    j4reg(dir.path(), &["synth", "--function", "square", "--samples", "80", "--out-dir", "."]);
    let out = j4reg(dir.path(), &["solve", "--data", "synth.csv", "--max-iter", "1", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(4));
    let report = &stdout_lines(&out)[0];
    assert_eq!(report["converged"], false);
    assert_eq!(report["iterations"], 1);

    let out = j4reg(dir.path(), &["solve", "--data", "lin.csv"]);
    assert_eq!(out.status.code(), Some(3));
    linear_csv(dir.path());
    let out = j4reg(dir.path(), &["solve", "--data", "lin.csv", "--c", "1000", "--out-dir", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = &stdout_lines(&out)[0];
    assert_eq!(report["converged"], true);
    assert!(report["train_r2"].as_f64().unwrap() > 0.999999);
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path());
    std::fs::write(
        dir.path().join("run.toml"),
        "data = \"lin.csv\"\nk_folds = 3\nepochs = 40\nseed = 7\nout_dir = \"from_config\"\n",
    )
    .unwrap();
    let out = j4reg(dir.path(), &["--config", "run.toml", "evaluate", "--k-folds", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = stdout_lines(&out);
    // one line per fold, then the aggregate
    assert_eq!(lines.len(), 5);
    for (i, line) in lines[..4].iter().enumerate() {
        assert_eq!(line["fold"], i);
        assert_eq!(line["seed"], 7);
    }
    let agg = &lines[4];
    assert_eq!(agg["config"]["k_folds"], 4);
    assert_eq!(agg["config"]["epochs"], 40);
    assert!(agg["mean_test_r2"].as_f64().unwrap().is_finite());

    std::fs::write(dir.path().join("bad.toml"), "epochz = 3\n").unwrap();
    let out = j4reg(dir.path(), &["--config", "bad.toml", "regressability"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path());
    let out = j4reg(
        dir.path(),
        &["train", "--data", "lin.csv", "--epochs", "300", "--pca", "--snapshots", "100", "--out-dir", "m"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut produced = files_in(&dir.path().join("m"));
    produced.sort();
    assert_eq!(produced, vec!["loss.csv", "model.json", "pca_epoch_100.csv"]);

    let out = j4reg(
        dir.path(),
        &["predict", "--model", "m/model.json", "--input", "lin.csv", "--out-dir", "p"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = &stdout_lines(&out)[0];
    assert_eq!(summary["n_samples"], 60);
    assert!(summary["r2"].as_f64().unwrap() > 0.99);
    assert_eq!(files_in(&dir.path().join("p")), vec!["predictions.csv"]);

    let out = j4reg(dir.path(), &["predict", "--model", "missing.json", "--input", "lin.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_needs_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    linear_csv(dir.path());
    let out = j4reg(dir.path(), &["compare-bibennett", "--data", "lin.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = j4reg(
        dir.path(),
        &["compare-bibennett", "--data", "lin.csv", "--epsilon", "0.5", "--k-folds", "3", "--epochs", "30"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let methods: Vec<String> = stdout_lines(&out)
        .iter()
        .filter(|l| l["record"] == "aggregate")
        .map(|l| l["method"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(methods, vec!["bi_bennett", "equivalence_svc", "j4"]);
}
