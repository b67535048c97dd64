use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minvarx")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Simulated autoregressive data at `structure`; returns the responses file.
fn simulated(dir: &Path, structure: &str, k: &str, t: &str, seed: &str) -> std::path::PathBuf {
    let y = dir.join("y.csv");
    let model = dir.join("model.json");
    let out = run(&[
        "simulate", "--structure", structure, "--k", k, "--m", k, "--t", t, "--seed", seed, "--y-out", p(&y), "-o",
        p(&model),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    y
}

#[test]
fn enumerate_counts() {
    let v = json(&run(&["enumerate", "--h", "10", "--p", "5"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["result"]["count"], 2002);
    let v = json(&run(&["enumerate", "--h", "2", "--p", "2", "--k", "2", "--m", "2"]));
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 3);
    let out = run(&["enumerate", "--h", "1", "--p", "1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("structure,dvec,n_min,rank_alloc,centralizer_dim"));
}

#[test]
fn lq_reproduces_the_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    std::fs::write(&g, r#"{"structure": {"dvec": [1, 0, 1]}, "data": [[-2, 5], [3, -2], [1, 8], [1, -2]]}"#).unwrap();
    let v = json(&run(&["lq", "--g", p(&g)]));
    let go: Vec<f64> = v["result"]["G_o"]["data"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let want = [0.0, 0.0, -0.3969112, 0.049614, -0.1240347, -0.992278, -0.9922779, 0.124035];
    for (a, b) in go.iter().zip(want) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn simulate_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulated(dir.path(), "[(2, 1), (1, 1)]", "2", "400", "3");
    let v = json(&run(&["fit", "--y", p(&y), "--autoregressive", "--structure", "[(2, 1), (1, 1)]", "--seed", "1"]));
    assert_eq!(v["result"]["converged"], true);
    assert_eq!(v["result"]["minimality_g"]["passed"], true);
    let fitted = v["result"]["neg_log_lik"].as_f64().unwrap();

    let sc = run(&["scan", "--y", p(&y), "--autoregressive", "--structure", "[(2, 1), (1, 1)]", "--points", "1000", "--format", "csv"]);
    assert!(sc.status.success());
    let text = String::from_utf8(sc.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "neg_log_lik", "argmin"]);
    let min = rdr.records().map(|r| r.unwrap()[1].parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
    assert!(min >= fitted - 1e-3);

    // the full-rank structure is least squares
    let full = json(&run(&["fit", "--y", p(&y), "--autoregressive", "--structure", "[(2, 2)]", "--seed", "1"]));
    let ols = json(&run(&["fit", "--y", p(&y), "--autoregressive", "--full-ols", "--p", "2"]));
    let llk = |v: &Value| v["result"]["neg_log_lik"].as_f64().unwrap();
    assert!((llk(&full) - llk(&ols)).abs() < 1e-6);

    let fit_file = dir.path().join("fit.json");
    assert!(run(&["fit", "--y", p(&y), "--autoregressive", "--structure", "[(2, 1), (1, 1)]", "--seed", "1", "-o", p(&fit_file)])
        .status
        .success());
    let pr = json(&run(&["predict", "--model", p(&fit_file), "--y", p(&y), "--autoregressive", "--steps", "3"]));
    assert_eq!(pr["result"]["forecast"]["shape"], serde_json::json!([3, 2]));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulated(dir.path(), "[(2, 1)]", "2", "200", "5");
    let first = std::fs::read(&y).unwrap();
    let y2 = simulated(dir.path(), "[(2, 1)]", "2", "200", "5");
    assert_eq!(first, std::fs::read(&y2).unwrap());

    let args = ["select", "--y", p(&y), "--autoregressive", "--p", "2", "--seed", "4"];
    let a = run(&args);
    let b = run(&[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["enumerate", "--h", "x", "--p", "1"]).status.code(), Some(2));
    assert_eq!(run(&["enumerate", "--h", "0", "--p", "1"]).status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y1,y2\n1,2\n3,oops\n").unwrap();
    let out = run(&["fit", "--y", p(&bad), "--autoregressive", "--structure", "1", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let missing = dir.path().join("nope.csv");
    assert_eq!(run(&["fit", "--y", p(&missing), "--autoregressive", "--structure", "1", "--seed", "0"]).status.code(), Some(3));

    let y = simulated(dir.path(), "1", "2", "50", "0");
    // more rank than regressors
    assert_eq!(run(&["fit", "--y", p(&y), "--autoregressive", "--structure", "3", "--seed", "0"]).status.code(), Some(2));
    assert_eq!(run(&["fit", "--y", p(&y), "--autoregressive", "--structure", "1"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--y", p(&y), "--autoregressive", "--structure", "[(1, 2)]"]).status.code(), Some(2));

    // YY' singular
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, format!("y1,y2\n{}", "1,1\n".repeat(30))).unwrap();
    assert_eq!(run(&["fit", "--y", p(&flat), "--autoregressive", "--structure", "1", "--seed", "0"]).status.code(), Some(4));
}

#[test]
fn failures_leave_no_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("y.csv");
    let model = dir.path().join("model.json");
    // the structure cannot be realized with k = m = 1
    let out = run(&[
        "simulate", "--structure", "2", "--k", "1", "--m", "1", "--t", "10", "--seed", "0", "--y-out", p(&y), "-o",
        p(&model),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!y.exists() && !model.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
