use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sqbif(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqbif"))
        .args(args)
        .arg("-o")
        .arg(dir)
        .env_remove("SQBIF_OUTPUT_DIR")
        .output()
        .expect("spawn sqbif")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_VERIFY: &str = r#"
[mesh]
num_interior = 120
grading = { kind = "boundary_graded", exponent = 2.0 }

[verify]
grid_p = [2.0]
grid_delta = [0.5]
eps_list = [0.1, 0.01]
n_list = [5, 10]
jacobian_samples = 4
uniqueness_starts = 2
"#;

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[continuation]\nstep = 0.1\n").unwrap();
    let out = sqbif(dir.path(), &["-c", cfg.to_str().unwrap(), "eigen"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("step"), "{}", stderr(&out));
}

#[test]
fn invalid_override_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqbif(dir.path(), &["--q", "0.5", "eigen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("spec"), "{}", stderr(&out));
    let out = sqbif(dir.path(), &["--n-trunc", "many", "branch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--n-trunc"));
}

#[test]
fn missing_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqbif(dir.path(), &["-c", "/nonexistent/run.toml", "eigen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/run.toml"));
}

#[test]
fn eigen_prints_first_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqbif(dir.path(), &["eigen"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let l1 = v["lambda1"].as_f64().unwrap();
    let exact = std::f64::consts::PI.powi(2);
    assert!((l1 - exact).abs() / exact < 1e-3, "{l1}");
}

#[test]
fn torsion_and_minimal_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqbif(dir.path(), &["--nodes", "100", "torsion"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("torsion.csv").exists());
    let out = sqbif(dir.path(), &["--nodes", "100", "minimal", "--lambda", "1.0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("minimal.csv").exists());
    let log = fs::read_to_string(dir.path().join("minimal_iterates.jsonl")).unwrap();
    assert!(log.lines().count() >= 2);
    for line in log.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
}

#[test]
fn solve_beyond_bound_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqbif(dir.path(), &["--nodes", "100", "solve", "--lambda", "50"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn branch_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = sqbif(d.path(), &["--nodes", "200", "branch"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let ca = fs::read(a.path().join("branch.csv")).unwrap();
    let cb = fs::read(b.path().join("branch.csv")).unwrap();
    assert_eq!(ca, cb);
    assert!(String::from_utf8(ca).unwrap().lines().count() > 100);

    let m: Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("branch.json")).unwrap()).unwrap();
    assert_eq!(m["sign_changes"], 1);
    let fold = m["fold"]["lambda"].as_f64().unwrap();
    let sharp = m["bounds"]["sharp"].as_f64().unwrap();
    assert!(fold < sharp, "{fold} {sharp}");
    assert_eq!(m["fold"]["existence_guaranteed"], false);
    assert!(m["asymptote"].is_null());
    let svg = fs::read_to_string(a.path().join("branch.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn truncated_branch_reports_asymptote() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqbif(
        dir.path(),
        &["--nodes", "200", "--eps", "0.1", "--n-trunc", "5", "branch"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let m: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("branch.json")).unwrap()).unwrap();
    assert_eq!(m["termination"], "norm_cap");
    assert!(m["asymptote"].is_object(), "{m}");
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sqbif"))
        .args(["--nodes", "80", "torsion"])
        .env("SQBIF_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("torsion.csv").exists());
}

#[test]
fn plot_renders_branch_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqbif(dir.path(), &["--nodes", "120", "branch"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = dir.path().join("replot.svg");
    let csv = dir.path().join("branch.csv");
    let out = sqbif(
        dir.path(),
        &["plot", csv.to_str().unwrap(), "-O", svg.to_str().unwrap(), "--title", "replot"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(svg).unwrap();
    assert!(text.contains("replot"));
}

#[test]
fn verify_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, SMALL_VERIFY).unwrap();
    let out = sqbif(dir.path(), &["-c", cfg.to_str().unwrap(), "verify"]);
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(out.status.code(), Some(0), "{stdout}\n{}", stderr(&out));
    assert!(stdout.lines().any(|l| l.starts_with("PASS fold_bound")));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verification.json")).unwrap())
            .unwrap();
    assert_eq!(report["environment"]["num_interior"], 120);

    let out = sqbif(
        dir.path(),
        &["-c", cfg.to_str().unwrap(), "verify", "--tolerance-scale", "0"],
    );
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(out.status.code(), Some(4), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("SKIP")));
}
