use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_puritylab"));
    c.env("PURITYLAB_THREADS", "1");
    c
}

fn spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn norm_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let trace = spec(dir.path(), "trace4.json", r#"{"kind":"trace","d":4}"#);
    let out = run(&["norm", "--channel", trace.to_str().unwrap(), "--q", "2", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert!((v["result"]["estimate"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["config"]["command"]["norm"]["exponents"]["q"], 2.0);

    let id = spec(dir.path(), "id2.json", r#"{"kind":"identity","d":2}"#);
    let v = json(&run(&["norm", "--channel", id.to_str().unwrap(), "--q", "1", "--p", "2", "--method", "fixed_point"]));
    assert!((v["result"]["estimate"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn scan_depolarizing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let depol = spec(dir.path(), "depol2.json", r#"{"kind":"depolarizing","d":2,"lambda":0.5}"#);
    let out = run(&[
        "scan",
        "--channel",
        depol.to_str().unwrap(),
        "--lambda",
        "0:1:0.1",
        "--q",
        "1",
        "--p",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# puritylab schema_version=1"));
    assert_eq!(lines.next().unwrap(), "lambda,q,p,estimate,thm1_bound,thm2_bound,slack,verdict");
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let f: Vec<_> = row.split(',').collect();
        let lambda: f64 = f[0].parse().unwrap();
        let est: f64 = f[3].parse().unwrap();
        assert!((est - ((1.0 + lambda * lambda) / 2.0).sqrt()).abs() < 1e-5, "{row}");
        assert_eq!(f[7], "holds");
    }
}

#[test]
fn verify_suite_and_exit_codes() {
    let out = run(&["verify", "--suite", "bk1,pinching", "--trials", "20", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["reports"].as_array().unwrap().len(), 40);

    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["lsc", "--d", "2"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn lsc_constants() {
    let v = json(&run(&["lsc", "--d", "3"]));
    assert!((v["result"]["alpha2_single"].as_f64().unwrap() - 0.961797).abs() < 1e-6);
    assert!((v["result"]["alpha2_product_bound"].as_f64().unwrap() - 0.233399).abs() < 1e-6);
    assert_eq!(v["result"]["sound"], true);
}

#[test]
fn replay_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let chan = spec(dir.path(), "r.json", r#"{"kind":"random","d_in":2,"d_out":2,"env":2,"seed":4}"#);
    let first = dir.path().join("first.json");
    let out = run(&[
        "norm",
        "--channel",
        chan.to_str().unwrap(),
        "--q",
        "1.5",
        "--p",
        "inf",
        "--seed",
        "9",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let again = run(&["replay", first.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    let a: Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    let b = json(&again);
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["config"]["command"], b["config"]["command"]);
}

#[test]
fn parse_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = spec(dir.path(), "bad.json", r#"{"kind":"depolarizing","d":"three","lambda":0.5}"#);
    let out = run(&["choi", "--channel", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("depolarizing.d"), "{err}");
}

#[test]
fn hunt_finds_nothing_small() {
    let v = json(&run(&["hunt", "--d", "2", "--p", "4", "--trials", "6", "--seed", "2"]));
    assert_eq!(v["result"]["findings"].as_array().unwrap().len(), 0);
}
