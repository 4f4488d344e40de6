use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMOKE: &str = r#"{
    "schema_version": 1, "master_seed": 21, "experiment": "log_laplace",
    "functional": {"kind": "trivial_one"},
    "density": {"kind": "constant", "value": 1.0, "dim": 2},
    "test_function": {"kind": "constant", "value": 1.0},
    "lambdas": [64], "alpha": {"kind": "power", "beta": 0.0625},
    "reps": 100, "calibration_reps": 100,
    "sigma": {"kind": "exact", "value": 1.0},
    "tolerances": {"final_z": 4.0}
}"#;

fn geoprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoprob")).args(args).env_remove("GEOPROB_OUT").output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for name in ["report.json", "manifest.json", "cells/log_laplace.csv"] {
        out.push((name.to_string(), fs::read(dir.join(name)).unwrap()));
    }
    out
}

#[test]
fn smoke_run_writes_all_outputs_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let a = tmp.path().join("a");
    let out = geoprob(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = a.join("manifest.json");
    let b = tmp.path().join("b");
    let out = geoprob(&["run", "--config", manifest.to_str().unwrap(), "--out", b.to_str().unwrap(), "--jobs", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(tree(&a), tree(&b));
    let csv = fs::read_to_string(a.join("cells/log_laplace.csv")).unwrap();
    assert!(!csv.contains('\r'));
    assert!(csv.starts_with("lambda,alpha,a,se,ess,target\n"));
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    geoprob(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]);
    geoprob(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "99"]);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["master_seed"], 99);
    assert_ne!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
}

#[test]
fn impossible_tolerance_exits_two_and_names_the_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMOKE.replace("\"final_z\": 4.0", "\"final_z\": 1e-12");
    let cfg = write_config(tmp.path(), &body);
    let out = geoprob(&["run", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("final_within_z"));
}

#[test]
fn validate_lists_every_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMOKE.replace("\"reps\": 100", "\"reps\": -1").replace("\"lambdas\": [64]", "\"lambdas\": []");
    let cfg = write_config(tmp.path(), &body);
    let out = geoprob(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("reps:") && err.contains("lambdas:"), "{err}");
    let ok = write_config(tmp.path(), SMOKE);
    let out = geoprob(&["validate", "--config", &ok]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"calibration_reps\": 100"));
}

#[test]
fn verbs_fill_in_or_check_the_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let body = SMOKE.replace("\"experiment\": \"log_laplace\",", "");
    let cfg = write_config(tmp.path(), &body);
    let out = geoprob(&["mdp", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let cfg = write_config(tmp.path(), SMOKE);
    let out = geoprob(&["mixing", "--config", &cfg, "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verb runs"));
}

#[test]
fn unwritable_output_is_an_execution_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = geoprob(&["run", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let out = Command::new(env!("CARGO_BIN_EXE_geoprob"))
        .args(["run", "--config", &cfg])
        .env("GEOPROB_OUT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("root/log_laplace/report.json").exists());
}
