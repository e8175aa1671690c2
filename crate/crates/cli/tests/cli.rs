use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pgw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgw")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const CLOUD: &str = "x,y\n0.1,0.2\n0.9,0.4\n0.3,0.8\n0.7,0.7\n0.5,0.1\n0.2,0.5\n";
const OTHER: &str = "0,0,0\n1,0,0\n0,1,0\n0,0,1.5\n0.4,0.4,0.4\n0.8,0.1,0.6\n0.3,0.9,0.2\n";

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

#[test]
fn self_match_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", CLOUD);
    let out = pgw(&["solve", &a, &a, "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["pgw_value"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["plan"]["kind"], "dense");
}

#[test]
fn solver_variants_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", CLOUD);
    let b = write(dir.path(), "b.csv", OTHER);
    let values: Vec<f64> = ["v1", "v2"]
        .iter()
        .map(|v| {
            let out = pgw(&["solve", &a, &b, "--lambda", "0.5", "--solver", v, "--seed", "3"]);
            assert_eq!(out.status.code(), Some(0));
            report(&out)["pgw_value"].as_f64().unwrap()
        })
        .collect();
    assert!((values[0] - values[1]).abs() <= 1e-9);
}

#[test]
fn iteration_limit_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", CLOUD);
    let b = write(dir.path(), "b.csv", OTHER);
    let out = pgw(&["solve", &a, &b, "--lambda", "0.5", "--max-iters", "1", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["termination"], "iteration-limit");
}

#[test]
fn missing_file_names_path() {
    let out = pgw(&["solve", "/no/such/cloud.csv", "/no/such/cloud.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/cloud.csv"));
}

#[test]
fn malformed_input_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "0,0\n1,oops\n");
    let out = pgw(&["solve", &bad, &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:2:2"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pgw(&["solve"]).status.code(), Some(1));
    assert_eq!(pgw(&["solve", "a", "b", "--solver", "v3"]).status.code(), Some(1));
    assert_eq!(pgw(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_input_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", r#"{"points": [[0, 0], [1, 0], [0, 2]], "weights": [0.2, 0.3, 0.5]}"#);
    let out_path = dir.path().join("plan.csv");
    let out = pgw(&["solve", &a, &a, "--lambda", "10", "--format", "csv", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&out_path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["i", "j", "mass"]);
    let total: f64 = reader.records().map(|r| r.unwrap()[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

fn bench_rows(args: &[&str]) -> Vec<csv::StringRecord> {
    let out = pgw(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        reader.headers().unwrap(),
        vec!["n", "lambda", "variant", "iters", "seconds", "pgw_value", "mass", "seed"]
    );
    reader.records().map(|r| r.unwrap()).collect()
}

#[test]
fn bench_single_size_gives_six_rows() {
    let rows = bench_rows(&["bench", "--sizes", "10"]);
    assert_eq!(rows.len(), 6);
    for pair in rows.chunks(2) {
        let v1: f64 = pair[0][5].parse().unwrap();
        let v2: f64 = pair[1][5].parse().unwrap();
        assert_eq!((&pair[0][2], &pair[1][2]), ("v1", "v2"));
        assert!((v1 - v2).abs() <= 1e-9);
    }
}

#[test]
fn bench_default_gives_eighteen_rows() {
    assert_eq!(bench_rows(&["bench"]).len(), 18);
}

#[test]
fn shape_matching_is_seeded() {
    let args = ["match-shapes", "--n-per-shape", "15", "--starts", "3", "--seed", "4"];
    let a = pgw(&args);
    let b = pgw(&args);
    assert!(matches!(a.status.code(), Some(0) | Some(2)));
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["seed"], 4);
    assert!(r["pairs"].as_array().is_some());
}

#[test]
fn pu_demo_runs() {
    let out = pgw(&["pu-demo", "--n-positive", "30", "--m-unlabeled", "100", "--seed", "2"]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let acc = report(&out)["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
}
