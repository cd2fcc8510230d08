use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vfstl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfstl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn vfstl")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn signal(dir: &Path) {
    fs::write(dir.join("sig.csv"), "x,y\n0.5,0.1\n1.0,0.2\n0.2,0.9\n").unwrap();
}

const SMALL: &str = r#"{
  "seed": 11,
  "collect": {"episodes": 20, "steps_per_episode": 200},
  "train": {"epochs": 3, "hidden_width": 16},
  "planner": {"horizon": 6, "iterations": 60},
  "bench": {"samples": 2}
}"#;

fn pipeline(dir: &Path) {
    fs::write(dir.join("cfg.json"), SMALL).unwrap();
    for cmd in ["collect", "train"] {
        let out = vfstl(dir, &[cmd, "--config", "cfg.json", "--out", "o"]);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = vfstl(dir, &["plan", "--config", "cfg.json", "--out", "o", "--formula", "F[0,4] R>0.8"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = vfstl(dir, &["bench", "--config", "cfg.json", "--out", "o", "--replan-interval", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn monitor_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    signal(dir.path());
    let out = vfstl(dir.path(), &["monitor", "--formula", "F[0,2] y>0.5", "--signal", "sig.csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0.400000000 SAT\n");

    let out = vfstl(dir.path(), &["monitor", "--formula", "G[0,2] y>0.5", "--signal", "sig.csv"]);
    assert_eq!(code(&out), 1);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "-0.400000000 UNSAT\n");

    let out = vfstl(dir.path(), &["monitor", "--formula", "x>0.5", "--signal", "sig.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).ends_with("BOUNDARY\n"));

    let out = vfstl(
        dir.path(),
        &["monitor", "--formula", "y>0.5", "--signal", "sig.csv", "--t", "2"],
    );
    assert_eq!(code(&out), 0);
}

#[test]
fn monitor_errors() {
    let dir = tempfile::tempdir().unwrap();
    signal(dir.path());
    let out = vfstl(dir.path(), &["monitor", "--formula", "F[0,2] (y>0.5", "--signal", "sig.csv"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines[1].find("F[0,2]"), Some(2));
    assert_eq!(lines[2].find('^'), Some(2 + "F[0,2] (y>0.5".len()));

    let out = vfstl(dir.path(), &["monitor", "--formula", "F[0,5] y>0.5", "--signal", "sig.csv"]);
    assert_eq!(code(&out), 3);

    let out = vfstl(dir.path(), &["monitor", "--formula", "z>0", "--signal", "sig.csv"]);
    assert_eq!(code(&out), 4);

    let out = vfstl(dir.path(), &["monitor", "--formula", "y>0", "--signal", "missing.csv"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("typo.json"), r#"{"planner": {"iters": 5}}"#).unwrap();
    let out = vfstl(dir.path(), &["collect", "--config", "typo.json", "--out", "o"]);
    assert_eq!(code(&out), 4);
    let out = vfstl(dir.path(), &["collect", "--iterations", "0", "--out", "o"]);
    assert_eq!(code(&out), 4);
    let out = vfstl(dir.path(), &["plan", "--formula", "F[0,2] R>0.8", "--out", "o"]);
    assert_eq!(code(&out), 4, "missing model");
    let out = vfstl(dir.path(), &["plan", "--formula", "F[0,2 R>0.8", "--out", "o"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn pipeline_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let mut names: Vec<_> = fs::read_dir(a.path().join("o"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in [
        "dataset.csv",
        "model.json",
        "train_report.json",
        "plan.json",
        "bench.csv",
        "summary.json",
        "boxplot.svg",
        "plan_manifest.json",
        "bench_manifest.json",
    ] {
        assert!(names.iter().any(|n| n == name), "{name} missing");
    }
    for name in names {
        let x = fs::read(a.path().join("o").join(&name)).unwrap();
        let y = fs::read(b.path().join("o").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn manifest_reruns_the_same_plan() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let first = fs::read(dir.path().join("o/plan.json")).unwrap();

    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("o/plan_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "plan");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["formula"], "F[0,4] R>0.8");

    let out = vfstl(dir.path(), &["plan", "--config", "o/plan_manifest.json", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(dir.path().join("o/plan.json")).unwrap(), first);

    let plan: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(plan["skills"].as_array().unwrap().len(), 6);
    assert_eq!(plan["z_trajectory"].as_array().unwrap().len(), 7);

    let out = vfstl(
        dir.path(),
        &["plan", "--config", "o/plan_manifest.json", "--out", "o", "--seed", "12"],
    );
    assert_eq!(code(&out), 0);
    let other: Value = serde_json::from_slice(&fs::read(dir.path().join("o/plan.json")).unwrap()).unwrap();
    assert_eq!(other["seed"], 12);
}

#[test]
fn mpc_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let out = vfstl(
        dir.path(),
        &["mpc", "--config", "cfg.json", "--out", "o", "--formula", "F[0,4] R>0.8", "--replan-interval", "2"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run: Value = serde_json::from_slice(&fs::read(dir.path().join("o/run.json")).unwrap()).unwrap();
    assert_eq!(run["skills"].as_array().unwrap().len(), 6);
    assert_eq!(run["plans"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    assert!(csv.lines().count() > 6);
}
