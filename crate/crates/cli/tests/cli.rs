use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyrelax")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn solve_qp_bound() {
    let qp = fixture("qp.pop");
    let out = run(&["solve", "--input", &qp, "--hierarchy", "bsos", "--level", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let row = &v["rows"][0];
    assert!((row["bound"].as_f64().unwrap() - 0.125).abs() < 1e-5);
    assert_eq!(row["status"], "Optimal");
}

#[test]
fn infeasible_relaxation_exits_2() {
    let sq = fixture("sq.pop");
    let out = run(&["solve", "--input", &sq, "--hierarchy", "lp", "--level", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("infeasible"));
}

#[test]
fn missing_file_exits_1() {
    let out = run(&["solve", "--input", "/nonexistent/x.pop", "--hierarchy", "lp", "--level", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(run(&["solve", "--level", "1"]).status.code(), Some(1));
    let sq = fixture("sq.pop");
    let out = run(&["compare", "--input", &sq, "--hierarchy", "lp", "--levels", "3..2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn compare_json_schema() {
    let sq = fixture("sq.pop");
    let out = run(&["compare", "--input", &sq, "--hierarchy", "lp,bsos", "--levels", "1..2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["instance"], "sq");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        for key in ["hierarchy", "d", "k", "bound", "status", "residual", "iterations", "time_ms"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(rows[0]["hierarchy"], "lp");
    assert!(rows[0]["bound"].is_null());
}

#[test]
fn compare_csv_columns() {
    let sq = fixture("sq.pop");
    let out = run(&["compare", "--input", &sq, "--hierarchy", "lp,bsos", "--levels", "1..2", "--k", "1,2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "hierarchy,d,k,bound,status,residual,iterations,time_ms");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 4);
    for line in rows {
        assert_eq!(line.split(',').count(), 8, "{line}");
    }
}

#[test]
fn certify_linear_variety() {
    let lin = fixture("lin.pop");
    let out = run(&["certify", "--input", &lin, "--hierarchy", "lp", "--level", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["exactness"]["exact"], true);
    let variety = &v["variety"];
    assert!(!variety["omega"].as_array().unwrap().is_empty());
    assert_eq!(variety["constancy"], "constant");
    assert_eq!(variety["samples"], serde_json::json!([[0.0]]));
}

#[test]
fn lagrange_certified_qp() {
    let qp = fixture("qp.pop");
    let out = run(&["lagrange", "--input", &qp, "--level", "1", "--mode", "certified", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["quality"], "certified-exact");
    assert!((v["rho_estimate"].as_f64().unwrap() - 0.125).abs() < 1e-3);
}

#[test]
fn lagrange_trace_csv() {
    let qp = fixture("qp.pop");
    let out = run(&["lagrange", "--input", &qp, "--level", "1", "--mode", "certified", "--iterations", "20", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "iter,G,step,active");
    assert!(text.lines().count() > 1);
}

#[test]
fn lagrange_quartic_needs_heuristic_mode() {
    let q = fixture("quartic4.pop");
    let out = run(&["lagrange", "--input", &q, "--level", "1", "--mode", "certified"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["lagrange", "--input", &q, "--level", "1", "--mode", "heuristic", "--iterations", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["quality"], "heuristic");
}
