//! End-to-end checks of the `hymflow` binary: exit codes, output files,
//! reproducibility and checkpoint inspection.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const S1: &str = r#"
name = "line"
seed = 1
[torus]
n = 1
grid = [16]
[bundle]
blocks = [{ charges = [1] }]
[metric]
kind = "bump"
amplitude = 0.3
[flow]
t_max = 10.0
grad_tol = 1e-6
"#;

fn hymflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hymflow")).args(args).env("HYMFLOW_OUT", out).output().unwrap()
}

fn write_config(dir: &Path, file: &str, text: &str) -> PathBuf {
    let p = dir.join(file);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_config(dir: &Path, text: &str) -> Output {
    let cfg = write_config(dir, "cfg.toml", text);
    hymflow(&["run", cfg.to_str().unwrap()], &dir.join("out"))
}

#[test]
fn run_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "line.toml", S1);
    let a = hymflow(&["run", cfg.to_str().unwrap()], &dir.path().join("a"));
    let b = hymflow(&["run", cfg.to_str().unwrap()], &dir.path().join("b"));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    let trace = |root: &str| std::fs::read(dir.path().join(root).join("line/trace.csv")).unwrap();
    assert_eq!(trace("a"), trace("b"));
    let csv = String::from_utf8(trace("a")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,ym,hym,hym_1_0,"));
    assert!(header.ends_with(",sup_lambdaF,grad_l2,deg,topo,sigma_sup"));

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a/line/summary.json")).unwrap()).unwrap();
    for key in ["final_type", "hym_final", "hym_floor", "monotone_ok", "chern_drift", "converged"] {
        assert!(summary.get(key).is_some(), "summary lacks {key}");
    }
    assert_eq!(summary["converged"], true);
    assert_eq!(summary["monotone_ok"], true);

    let ckpt = dir.path().join("a/line/final.ckpt");
    let out = hymflow(&["inspect", ckpt.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("field h: 1x1") && text.contains("type = [") && text.contains("deg = 1.000000"), "{text}");
}

#[test]
fn short_run_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), &S1.replace("t_max = 10.0", "t_max = 0.01"));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn impossible_type_is_an_invariant_violation() {
    // Claiming type (2) puts the energy floor above the true minimum.
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), &S1.replace("seed = 1", "seed = 1\nexpected_type = [2.0]"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        S1.replace("grid = [16]", "grid = [15]"),
        S1.replace("grad_tol = 1e-6", "grad_tol = 1e-6\nalphas = [0.5]"),
        S1.replace("[metric]", "[metric]\nunknown = 1"),
    ] {
        let out = run_config(dir.path(), &text);
        assert_eq!(out.status.code(), Some(1), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    let missing = hymflow(&["inspect", "/nonexistent.ckpt"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn props_command_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hymflow(&["props", "--seed", "3", "--cases", "300"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.contains("PASS")).count() >= 8, "{text}");
}
