//! Exit codes and output files of the `fdlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fdlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdlab")).args(args).arg("--out").arg(out).env_remove("FDLAB_OUT_DIR").output().unwrap()
}

fn write_manifest(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, format!("schema_version = 1\n{body}")).unwrap();
    p.display().to_string()
}

#[test]
fn empty_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = fdlab(&["verify", "--suite", ""], &out);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(out.join("reports.jsonl")).unwrap(), "");
    assert!(fs::read_to_string(out.join("manifest.toml")).unwrap().contains("schema_version = 1"));
}

#[test]
fn zero_tolerance_fails_and_names_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), "levels = 1\n[tolerances]\n\"construction.theta\" = 0.0\n");
    let o = fdlab(&["verify", "--manifest", &m, "--suite", "construction"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL construction/theta_unit/profile@0"));
}

#[test]
fn construction_suite_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = fdlab(&["verify", "--suite", "construction", "--levels", "1", "--threads", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("level,suite,check,count,passed,min,median,max\n"));
    assert!(summary.contains("0,construction,tilde_r_cells,20,20,"));
}

#[test]
fn config_errors_carry_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), "[covering]\na = 0.9\nb = 0.6\n");
    let o = fdlab(&["verify", "--manifest", &m], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3: covering.a"));
    let o = fdlab(&["verify", "--suite", "nosuch"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown suite 'nosuch'"));
}

#[test]
fn solve_writes_snapshots_and_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let m = write_manifest(dir.path(), "[grid]\ncells = 16\nsteps = 16\n");
    let o = fdlab(&["solve", "--manifest", &m, "--levels", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let u = fdlab::grid::snapshot::read_snapshot(&out.join("u_level1.bin")).unwrap();
    assert_eq!(u.grid.cells[0], 32);
    assert!(out.join("u_level1.csv").exists() && out.join("exact_level0.bin").exists());
}

#[test]
fn profile_reports_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let m = write_manifest(dir.path(), "levels = 1\n[geometry]\npoints = [[0.0, 0.0, 1.25], [0.3, -0.2, 1.25]]\n");
    let o = fdlab(&["profile", "--manifest", &m], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.as_array().unwrap().len(), 2);
    assert!(out.join("profile1.csv").exists());
}

#[test]
fn cover_writes_one_dump_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let m = write_manifest(dir.path(), "levels = 1\n[covering]\nunit_cells = 32\nunit_steps = 16\nsweep_levels = 3\n");
    let o = fdlab(&["cover", "--manifest", &m], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 4);
    assert!(out.join("lambda2.json").exists() && out.join("mu.json").exists());
}

#[test]
fn out_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fdlab")).args(["verify", "--suite", ""]).env("FDLAB_OUT_DIR", dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("reports.jsonl").exists());
}
