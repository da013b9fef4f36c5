mod common;

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use pgg::io::{read_vector, write_matrix_bin, write_vector_bin};
use serde_json::{json, Value};

fn pgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgg")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a 20×60 instance with a 3-sparse signal and returns the manifest path.
fn fixture(dir: &Path, config: Value, extra: Value) -> std::path::PathBuf {
    let (a, x) = common::instance(20, 60, 3, 61);
    write_matrix_bin(dir.join("A.bin"), &a).unwrap();
    write_vector_bin(dir.join("y.bin"), &(&a * &x)).unwrap();
    write_vector_bin(dir.join("x.bin"), &x).unwrap();
    let mut manifest = json!({
        "A": "A.bin", "y": "y.bin", "x_star": "x.bin",
        "penalty": {"kind": "mcp"}, "config": config,
    });
    for (k, v) in extra.as_object().unwrap() {
        manifest[k] = v.clone();
    }
    let path = dir.join("instance.json");
    std::fs::write(&path, manifest.to_string()).unwrap();
    path
}

#[test]
fn solve_writes_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture(dir.path(), json!({"kappa": 1e-3, "max_iters": 5000}), json!({}));
    let out = dir.path().join("run.json");
    let res = pgg(&["solve", "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["iters_run"], 5000);
    assert!(report["rsnr"].as_f64().unwrap() > 40.0);
    let x_hat = read_vector(dir.path().join("run.x_hat.bin")).unwrap();
    assert_eq!(x_hat.len(), 60);

    let omp = pgg(&["solve", "--spec", p(&spec), "--out", p(&out), "--solver", "omp"]);
    assert_eq!(code(&omp), 0);
    let report: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(report["rsnr"].as_f64().unwrap() > 100.0);
}

#[test]
fn configuration_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = dir.path().join("o.json");
    assert_eq!(code(&pgg(&["solve", "--spec", p(&missing), "--out", p(&out)])), 1);
    assert_eq!(code(&pgg(&["solve"])), 1);
    assert_eq!(code(&pgg(&["frobnicate"])), 1);
    assert_eq!(code(&pgg(&["--help"])), 0);

    let spec = fixture(dir.path(), json!({"kappa": 1e-3, "max_iters": 10}), json!({}));
    let bad_pen = pgg(&["solve", "--spec", p(&spec), "--out", p(&out), "--penalty", r#"{"kind":"exp","sigma":-1}"#]);
    assert_eq!(code(&bad_pen), 1);
    let bad_kappa = pgg(&["solve", "--spec", p(&spec), "--out", p(&out), "--kappa", "0"]);
    assert_eq!(code(&bad_kappa), 1);
}

#[test]
fn numerical_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture(dir.path(), json!({"kappa": 1e308, "max_iters": 50}), json!({"penalty": {"kind": "abs"}}));
    let out = dir.path().join("o.json");
    let res = pgg(&["solve", "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));

    let mut a = DMatrix::from_fn(3, 5, |i, j| (i * 5 + j) as f64 + 1.0);
    a.set_row(2, &a.row(0).clone_owned());
    write_matrix_bin(dir.path().join("A.bin"), &a).unwrap();
    write_vector_bin(dir.path().join("y.bin"), &nalgebra::DVector::from_element(3, 1.0)).unwrap();
    std::fs::write(
        dir.path().join("singular.json"),
        json!({"A": "A.bin", "y": "y.bin", "penalty": {"kind": "abs"}, "config": {"kappa": 1e-3, "max_iters": 5}}).to_string(),
    )
    .unwrap();
    let res = pgg(&["solve", "--spec", p(&dir.path().join("singular.json")), "--out", p(&out)]);
    assert_eq!(code(&res), 2);
}

const TINY: &str = r#"{"experiment_id": "tiny", "M": 20, "N": 60, "K": {"from": 1, "to": 6},
  "nonzero_dist": "gaussian", "penalties": [{"kind": "abs"}, {"kind": "mcp"}], "nonconvexity": [1.0],
  "kappa": 1e-3, "trials": 5, "base_seed": 3, "max_iters": 4000}"#;

#[test]
fn phase_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, TINY).unwrap();
    let (o1, o2) = (dir.path().join("a"), dir.path().join("b"));
    let start = Instant::now();
    let r1 = pgg(&["phase", "--spec", p(&spec), "--out", p(&o1), "--jobs", "1"]);
    assert!(start.elapsed() < Duration::from_secs(60));
    assert_eq!(code(&r1), 0, "{}", String::from_utf8_lossy(&r1.stderr));
    assert_eq!(code(&pgg(&["phase", "--spec", p(&spec), "--out", p(&o2), "--jobs", "3"])), 0);
    for f in ["trials.csv", "aggregate.csv", "kmax.json", "spec.json"] {
        assert_eq!(std::fs::read(o1.join(f)).unwrap(), std::fs::read(o2.join(f)).unwrap(), "{f} differs");
    }
    let kmax: Value = serde_json::from_slice(&std::fs::read(o1.join("kmax.json")).unwrap()).unwrap();
    assert_eq!(kmax.as_array().unwrap().len(), 2);

    let o3 = dir.path().join("c");
    assert_eq!(code(&pgg(&["phase", "--spec", p(&spec), "--out", p(&o3), "--seed", "4"])), 0);
    assert_ne!(std::fs::read(o1.join("trials.csv")).unwrap(), std::fs::read(o3.join("trials.csv")).unwrap());
}

#[test]
fn sweep_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let out = dir.path().join("o");
    std::fs::write(&spec, TINY.replace(r#"{"from": 1, "to": 6}"#, "[]")).unwrap();
    assert_eq!(code(&pgg(&["phase", "--spec", p(&spec), "--out", p(&out)])), 1);
    std::fs::write(&spec, TINY).unwrap();
    assert_eq!(code(&pgg(&["rsnr", "--spec", p(&spec), "--out", p(&out)])), 1);
    assert_eq!(code(&pgg(&["phase", "--spec", p(&spec), "--out", p(&out), "--msnr", "loud"])), 1);
}

#[test]
fn rsnr_sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"M": 20, "N": 60, "K": 2, "nonzero_dist": "bernoulli", "penalties": [{"kind": "abs"}],
            "kappa": [1e-2, 1e-3], "msnr": [20, "inf"], "trials": 3, "base_seed": 1, "max_iters": 2000}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&pgg(&["rsnr", "--spec", p(&spec), "--out", p(&out)])), 0);
    let agg = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 4);
    assert!(!out.join("kmax.json").exists());
}

#[test]
fn analyze_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let spec = fixture(dir.path(), json!({"kappa": 1e-3, "max_iters": 10}), json!({"penalty": {"kind": "abs"}}));
    let res = pgg(&["analyze", "--spec", p(&spec), "--gamma", "0.5", "--m0", "2"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let r: Value = serde_json::from_slice(&res.stdout).unwrap();
    for key in ["gamma", "M0", "C1", "C2", "C3", "C4", "C5", "C6", "C7", "d", "threshold", "theorem3_ok"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    // (1 - gamma) / ((5 + 3 gamma) M0) with gamma = 0.5, M0 = 2
    assert!((r["threshold"].as_f64().unwrap() - 0.5 / 13.0).abs() < 1e-15);
    assert_eq!(r["C5"].as_f64().unwrap(), 0.0);
    assert_eq!(r["C6"].as_f64().unwrap(), 0.0);
    assert_eq!(r["theorem3_ok"], true);
    assert!(r["bounds"]["apgg"].as_f64().unwrap() > 0.0);

    let approx = fixture(dir.path(), json!({"kappa": 1e-3, "max_iters": 10}), json!({"projection": {"mode": "approx", "steps": 2}}));
    let out = dir.path().join("report.json");
    let res = pgg(&["analyze", "--spec", p(&approx), "--out", p(&out), "--penalty", r#"{"kind":"mcp","sigma":50}"#]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert!(r["C5"].as_f64().unwrap() > 0.0);
    assert_eq!(r["theorem3_ok"], false);

    assert_eq!(code(&pgg(&["analyze", "--spec", p(&spec), "--gamma", "1.0"])), 1);
    assert_eq!(code(&pgg(&["analyze", "--spec", p(&spec), "--gamma", "-0.1"])), 1);
}

#[test]
fn pinv_report_lists_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let a = pgg::harness::gen_matrix(20, 50, 62);
    let path = dir.path().join("A.bin");
    write_matrix_bin(&path, &a).unwrap();
    let res = pgg(&["pinv-report", "--matrix", p(&path), "--steps", "4"]);
    assert_eq!(code(&res), 0);
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,zeta,d");
    let zetas: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(zetas.len(), 5);
    for w in zetas.windows(2) {
        assert!(w[1] <= w[0] * w[0] + 1e-9);
    }
}
