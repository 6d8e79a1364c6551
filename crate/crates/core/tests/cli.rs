use std::path::{Path, PathBuf};
use std::process::Command;

use hazardlab::cli::{
    cmd_intensity, cmd_simulate, exit_code, run, RunOptions, EXIT_NUMERICAL, EXIT_PASS, EXIT_STAT_FAIL, EXIT_USAGE,
    THREADS_ENV,
};
use hazardlab::config::{OutputFormat, RunConfig};
use hazardlab::HazardError;
use serde_json::{json, Value};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn example(name: &str) -> Value {
    let text = std::fs::read_to_string(configs().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("run.json");
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn hazardlab(args: &[&str]) -> i32 {
    let mut all = vec!["hazardlab"];
    all.extend_from_slice(args);
    run(all)
}

fn run_with(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    let (cfg, out) = (cfg.to_str().unwrap(), out.to_str().unwrap());
    let mut args = vec![sub, "--config", cfg, "--out", out];
    args.extend_from_slice(extra);
    hazardlab(&args)
}

fn rs_curve(engine: &str) -> Vec<(f64, f64)> {
    let mut v = example("rs_intensity.json");
    v["intensity"]["engine"] = json!(engine);
    let cfg = RunConfig::parse(&v.to_string()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cmd_intensity(&cfg, &RunOptions::new(dir.path(), OutputFormat::Json)).unwrap().points
}

#[test]
fn malformed_generator_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = example("regime_switching.json");
    v["model"]["generator"] = json!([[-1.0, 0.5], [0.5, -0.5]]);
    let cfg = write_config(dir.path(), &v);
    assert_eq!(run_with("verify", &cfg, dir.path(), &[]), EXIT_USAGE);
    let err = RunConfig::load(&cfg).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");

    std::fs::write(&cfg, "{\"model\": {\"kind\": \"plain_gbm\",").unwrap();
    let err = RunConfig::load(&cfg).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
    assert_eq!(exit_code(&err), EXIT_USAGE);
}

#[test]
fn named_curve_ends_at_the_reference_intensity() {
    let pts = rs_curve("named");
    let &(t, l) = pts.last().unwrap();
    assert_eq!(t, 1.0);
    assert!((l - 0.354_437_45).abs() < 1e-6, "{l}");
}

#[test]
fn generic_engine_reproduces_the_named_curve() {
    let named = rs_curve("named");
    let generic = rs_curve("eq5-generic");
    assert_eq!(named.len(), generic.len());
    for (a, b) in named.iter().zip(&generic) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() < 1e-8, "t = {}: {} vs {}", a.0, a.1, b.1);
    }
}

#[test]
fn intensity_csv_carries_version_and_formula() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("rs_intensity.json");
    assert_eq!(run_with("intensity", &cfg, dir.path(), &["--format", "csv"]), EXIT_PASS);
    let body = std::fs::read_to_string(dir.path().join("intensity.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "# format_version=1,engine=named");
    assert!(lines.next().unwrap().starts_with("# formula: "));
    assert_eq!(lines.next().unwrap(), "t,lambda");
    assert!(dir.path().join("atoms.csv").exists());
}

#[test]
fn too_few_paths_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = example("chain_hit.json");
    v["verify"]["n_paths"] = json!(999);
    let cfg = write_config(dir.path(), &v);
    assert_eq!(run_with("verify", &cfg, dir.path(), &[]), EXIT_USAGE);
}

#[test]
fn verification_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = example("chain_hit.json");
    v["verify"].as_object_mut().unwrap().remove("seed");
    let cfg = write_config(dir.path(), &v);
    assert_eq!(run_with("verify", &cfg, dir.path(), &[]), EXIT_USAGE);
    assert!(!dir.path().join("verify_residual.csv").exists());
    v["verify"]["n_paths"] = json!(2000);
    let cfg = write_config(dir.path(), &v);
    assert_eq!(run_with("verify", &cfg, dir.path(), &["--seed", "3"]), EXIT_PASS);
    assert!(dir.path().join("verify_residual.csv").exists());
}

#[test]
fn biased_compensator_exits_with_statistical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("chain_hit_biased.json");
    assert_eq!(run_with("verify", &cfg, dir.path(), &[]), EXIT_STAT_FAIL);
    let csv = std::fs::read_to_string(dir.path().join("verify_residual.csv")).unwrap();
    assert!(csv.lines().skip(2).any(|l| l.ends_with(",false")));
}

#[test]
fn simulation_output_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut v = example("regime_switching.json");
    v["simulate"] = json!({"n_paths": 500, "seed": 11});
    let cfg = write_config(a.path(), &v);
    for fmt in ["csv", "json"] {
        assert_eq!(run_with("simulate", &cfg, a.path(), &["--format", fmt]), EXIT_PASS);
        assert_eq!(run_with("simulate", &cfg, b.path(), &["--format", fmt]), EXIT_PASS);
        let name = format!("simulate.{fmt}");
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    assert_eq!(run_with("simulate", &cfg, b.path(), &["--format", "csv", "--seed", "12"]), EXIT_PASS);
    let x = std::fs::read(a.path().join("simulate.csv")).unwrap();
    let y = std::fs::read(b.path().join("simulate.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn zero_horizon_has_no_defaults() {
    let mut v = example("regime_switching.json");
    v["schedule"] = json!({"times": [0.0]});
    v.as_object_mut().unwrap().remove("verify");
    v["simulate"] = json!({"n_paths": 200, "seed": 1});
    let cfg = RunConfig::parse(&v.to_string()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let s = cmd_simulate(&cfg, &RunOptions::new(dir.path(), OutputFormat::Csv)).unwrap();
    assert_eq!(s.horizon, 0.0);
    assert_eq!(s.defaults, 0);
    assert!(s.paths.iter().all(|p| p.tau.is_none() && p.windows.is_empty()));
    let csv = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    assert!(csv.lines().skip(2).all(|l| l.split(',').nth(1) == Some("inf")));
}

#[test]
fn plain_gbm_default_fraction() {
    let cfg = RunConfig::load(&configs().join("plain_gbm.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let s = cmd_simulate(&cfg, &RunOptions::new(dir.path(), OutputFormat::Json)).unwrap();
    assert_eq!(s.n_paths, 100_000);
    let z = (s.default_fraction - 0.317_310_5) / s.se;
    assert!(z.abs() <= 3.5, "fraction {} ± {}", s.default_fraction, s.se);
}

#[test]
fn numerical_errors_have_their_own_exit_code() {
    assert_eq!(exit_code(&HazardError::Domain("x".into())), EXIT_NUMERICAL);
    assert_eq!(exit_code(&HazardError::SingularKernel { from: 0.0, to: 1.0 }), EXIT_NUMERICAL);
    assert_eq!(exit_code(&HazardError::Quadrature { achieved: 1e-6, requested: 1e-12 }), EXIT_NUMERICAL);
    assert_eq!(exit_code(&HazardError::Validation("x".into())), EXIT_USAGE);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(hazardlab(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(hazardlab(&["verify"]), EXIT_USAGE);
    assert_eq!(hazardlab(&["verify", "--config", "/nonexistent/run.json"]), EXIT_USAGE);
    assert_eq!(hazardlab(&["--help"]), EXIT_PASS);
}

fn binary(args: &[&str], threads: Option<&str>) -> i32 {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hazardlab"));
    c.args(args).env_remove(THREADS_ENV);
    if let Some(t) = threads {
        c.env(THREADS_ENV, t);
    }
    c.output().unwrap().status.code().unwrap()
}

#[test]
fn binary_reports_thread_setting_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = example("chain_hit.json");
    v["verify"]["n_paths"] = json!(2000);
    let cfg = write_config(dir.path(), &v);
    let args = ["verify", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    assert_eq!(binary(&args, Some("two")), EXIT_USAGE);
    assert_eq!(binary(&args, Some("0")), EXIT_USAGE);
    assert_eq!(binary(&args, Some("2")), EXIT_PASS);
    assert_eq!(binary(&args, None), EXIT_PASS);
}
