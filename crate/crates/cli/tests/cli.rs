use std::path::Path;
use std::process::{Command, Output};

fn lake(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lake"))
        .env("LAKE_ROOT", root)
        .args(args)
        .output()
        .expect("run lake binary")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(out: Output) -> serde_json::Value {
    serde_json::from_str(&ok(out)).unwrap()
}

#[test]
fn empty_lake_reports_zero_raw_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("lake");
    ok(lake(&root, &["init"]));
    let stats = json(lake(&root, &["stats", "--format", "json"]));
    assert_eq!(stats["raw_bytes"], 0);
    assert_eq!(stats["ratio"], 0.0);
}

#[test]
fn sample_corpus_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("lake");
    let samples = dir.path().join("samples");
    ok(lake(
        &root,
        &["fixture", samples.to_str().unwrap(), "--documents", "60"],
    ));
    ok(lake(dir.path(), &["init", root.to_str().unwrap()]));
    let report = json(lake(&root, &["ingest", samples.to_str().unwrap(), "--format", "json"]));
    assert_eq!(report["objects_added"], 72);
    assert_eq!(report["failures"], serde_json::json!([]));

    let text = ok(lake(&root, &["search", "big", "data"]));
    let n: usize = text.split_whitespace().next().unwrap().parse().unwrap();
    assert!(n > 0, "{text}");
    let hits = json(lake(&root, &["search", "big", "data", "--format", "json"]));
    assert_eq!(hits.as_array().unwrap().len(), n.min(20));
    ok(lake(&root, &["search", "dta", "--fuzzy", "--expand"]));

    let csv = ok(lake(&root, &["query", "sql", "SELECT COUNT(*) AS n FROM cities"]));
    assert_eq!(csv.lines().next(), Some("n"));
    let bad = lake(&root, &["query", "sql", "SELECT nope FROM cities"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));

    let out = dir.path().join("bench.json");
    let table = ok(lake(&root, &["bench", "--runs", "10", "--out", out.to_str().unwrap()]));
    assert_eq!(table.lines().count(), 16, "{table}");
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written.as_array().unwrap().len(), 15);
    assert!(!lake(&root, &["bench", "--runs", "3"]).status.success());

    for kind in ["keywords", "wordcloud", "pca", "kmeans"] {
        let svg = dir.path().join(format!("{kind}.svg"));
        ok(lake(&root, &["plot", kind, "--out", svg.to_str().unwrap()]));
        assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    }
    let svg = dir.path().join("tuples.svg");
    ok(lake(
        &root,
        &[
            "plot",
            "kmeans",
            "--sql",
            "SELECT * FROM readings",
            "--out",
            svg.to_str().unwrap(),
        ],
    ));
}

#[test]
fn commands_fail_cleanly_outside_a_lake() {
    let dir = tempfile::tempdir().unwrap();
    let out = lake(dir.path(), &["stats"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("opening lake"));
    assert!(!lake(dir.path(), &["frobnicate"]).status.success());
}
