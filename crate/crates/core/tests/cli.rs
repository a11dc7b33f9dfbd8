use std::path::Path;
use std::process::{Command, Output};

use walkerpose::eval::parse_metrics_csv;
use walkerpose::features::table::read_feature_csv;
use walkerpose::pose::io::read_dataset;
use walkerpose::serve::Response;

fn walkerpose(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walkerpose"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = walkerpose(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--spec", "small", "--seed", "4", "--out", "a.ndjson"], d);
    ok(&["synth", "--spec", "small", "--seed", "4", "--out", "b.ndjson"], d);
    ok(&["synth", "--spec", "small", "--seed", "5", "--out", "c.ndjson"], d);
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.ndjson"), read("b.ndjson"));
    assert_ne!(read("a.ndjson"), read("c.ndjson"));
    let ds = read_dataset(d.join("a.ndjson")).unwrap();
    assert_eq!(ds.len(), 6 * 17 * 10);
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--spec", "small", "--seed", "1", "--out", "data.ndjson"], d);
    ok(&["extract", "--input", "data.ndjson", "--out", "features.csv"], d);
    let (x, labels) = read_feature_csv(d.join("features.csv")).unwrap();
    assert_eq!((x.n_rows(), x.n_cols(), labels.len()), (1020, 48, 1020));

    let fast = ["--rounds", "5", "--max-depth", "3"];
    let mut train = vec!["train", "gbt", "--input", "features.csv", "--out", "multi.json"];
    train.extend(fast);
    ok(&train, d);
    let mut risk = vec!["train", "gbt", "--target", "risk", "--input", "data.ndjson", "--out", "risk.json"];
    risk.extend(fast);
    ok(&risk, d);
    ok(&["train", "svm", "--input", "features.csv", "--out", "svm.json", "--svm-epochs", "5"], d);

    let out = ok(
        &["eval", "--model", "multi.json", "--input", "data.ndjson", "--out", "metrics.csv", "--json", "eval.json"],
        d,
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("posture_type"));
    let rows = parse_metrics_csv(&std::fs::read_to_string(d.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy)));
    ok(&["eval", "--model", "svm.json", "--input", "features.csv"], d);
    ok(&["eval", "--model", "risk.json", "--input", "data.ndjson"], d);

    let mut report = vec!["report", "--input", "data.ndjson", "--out-dir", "report", "--holdout", "2", "--svm-epochs", "5"];
    report.extend(fast);
    ok(&report, d);
    for name in ["report.txt", "metrics.csv", "f1_comparison.csv", "report.json", "gbt_multi.json", "svm_multi.json"] {
        assert!(d.join("report").join(name).is_file(), "{name} missing");
    }
    let text = std::fs::read_to_string(d.join("report/report.txt")).unwrap();
    assert!(text.contains("GBT multi-output") && text.contains("SVM"));
}

#[test]
fn classify_file_replays_a_session() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &["synth", "--session", "standing_still:3,sitting:3", "--seed", "2", "--out", "s.ndjson", "--truth", "t.csv"],
        d,
    );
    ok(&["classify-file", "--input", "s.ndjson", "--out", "r.ndjson"], d);
    let text = std::fs::read_to_string(d.join("r.ndjson")).unwrap();
    let responses: Vec<Response> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(responses.len(), 60);
    let last = match responses.last().unwrap() {
        Response::Result(r) => r.geometric.pose().unwrap(),
        other => panic!("{other:?}"),
    };
    assert_eq!(last.name(), "sitting");
    assert_eq!(std::fs::read_to_string(d.join("t.csv")).unwrap().lines().count(), 61);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(walkerpose(&["frobnicate"], d).status.code(), Some(1));
    assert_eq!(walkerpose(&["--help"], d).status.code(), Some(0));
    assert_eq!(walkerpose(&["extract", "--input", "missing.ndjson", "--out", "f.csv"], d).status.code(), Some(2));
    assert!(!d.join("f.csv").exists());
    std::fs::write(d.join("broken.ndjson"), "{\"schema\":1}\nnot json\n").unwrap();
    assert_eq!(walkerpose(&["extract", "--input", "broken.ndjson", "--out", "f.csv"], d).status.code(), Some(2));
    assert!(!d.join("f.csv").exists());
    assert_eq!(walkerpose(&["synth", "--spec", "huge", "--out", "x.ndjson"], d).status.code(), Some(1));
}

#[test]
fn failed_training_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--spec", "small", "--seed", "1", "--out", "data.ndjson"], d);
    let out = walkerpose(&["train", "gbt", "--input", "data.ndjson", "--out", "m.json", "--rounds", "0"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.join("m.json").exists());
    let out = walkerpose(
        &["report", "--input", "data.ndjson", "--out-dir", "r", "--holdout", "9", "--rounds", "2"],
        d,
    );
    assert_ne!(out.status.code(), Some(0));
    assert!(!d.join("r/report.txt").exists());
}
