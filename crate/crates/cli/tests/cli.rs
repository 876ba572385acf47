use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn eflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eflab"))
        .args(args)
        .env_remove("EF_LAB_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn copy_play_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = eflab(&["play", "--game", "unitary", "--M", "M2", "--N", "M2", "--rounds", "3", "--eps", "1e-9", "--p2", "copy", "--seed", "11", "-o", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let t = read_json(&a);
    assert_eq!(t["schema_version"], 1);
    assert_eq!(t["verdict"]["winner"], "player2");
    assert!(t["margins"].as_array().unwrap().iter().all(|m| m["value"] == 0.0));
}

#[test]
fn scalar_side_loses_with_margin_one() {
    let o = eflab(&["play", "--game", "unitary", "--M", "M2", "--N", "C", "--rounds", "2", "--eps", "0.5", "--p1", "scripted:M:one; M:diag(1,-1)", "--p2", "gram-match", "--seed", "5"]);
    assert_eq!(code(&o), 0);
    let t: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["verdict"]["winner"], "player1");
    assert_eq!(t["margins"][0]["value"], 1.0);
}

#[test]
fn forfeit_exits_with_two() {
    let o = eflab(&["play", "--game", "unitary", "--M", "M2", "--N", "M2", "--rounds", "1", "--eps", "0.5", "--p1", "scripted:M:E11", "--seed", "1"]);
    assert_eq!(code(&o), 2);
    let t: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["verdict"]["forfeit"], true);
}

#[test]
fn seed_is_mandatory_with_env_fallback() {
    let args = ["play", "--game", "atomic", "--M", "M2", "--N", "M2", "--rounds", "1", "--eps", "0.1", "--formula", "n2(x1)"];
    assert_eq!(code(&eflab(&args)), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_eflab")).args(args).env("EF_LAB_SEED", "3").output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t["config"]["seed"], 3);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&eflab(&["bogus"])), 1);
    assert_eq!(code(&eflab(&["play", "--game", "chess"])), 1);
    assert_eq!(code(&eflab(&["play", "--game", "unitary", "--M", "M0", "--N", "M2", "--rounds", "1", "--eps", "0.1", "--seed", "1"])), 1);
    assert_eq!(code(&eflab(&["--help"])), 0);
}

#[test]
fn op_transform_twice_is_the_normalized_input() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("comm.cl");
    let text = "sup x:C1. inf y:U. n2(x.y - y.x)\n";
    std::fs::write(&src, text).unwrap();
    let once = dir.path().join("once.cl");
    assert_eq!(code(&eflab(&["transform", "--op", src.to_str().unwrap(), "-o", once.to_str().unwrap()])), 0);
    let twice = eflab(&["transform", "--op", once.to_str().unwrap()]);
    assert_eq!(code(&twice), 0);
    let normalized = format!("{}\n", eflab_core::formula::parse(text).unwrap());
    assert_eq!(String::from_utf8(twice.stdout).unwrap(), normalized);
    assert_ne!(std::fs::read_to_string(&once).unwrap(), normalized);
}

#[test]
fn unitary_transforms_add_fresh_variables() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("s.cl");
    std::fs::write(&src, "inf x:C1. n2(x - one)\n").unwrap();
    for (flag, sort) in [("--u", "C1"), ("--uu", "U")] {
        let o = eflab(&["transform", flag, src.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let out = String::from_utf8(o.stdout).unwrap();
        let f = eflab_core::formula::parse(&out).unwrap();
        assert_eq!(f.quantifier_count(), 2, "{out}");
        assert!(out.contains(&format!(":{sort}.")), "{out}");
    }
    assert_eq!(code(&eflab(&["transform", "--op", "--u", src.to_str().unwrap()])), 1);
}

#[test]
fn readjudication_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let o = eflab(&["play", "--game", "unitary", "--M", "M2", "--N", "M2", "--rounds", "3", "--eps", "0.05", "--p1", "haar", "--p2", "haar", "--seed", "2", "-o", t.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let same = eflab(&["readjudicate", t.to_str().unwrap()]);
    assert_eq!(code(&same), 0);
    assert_eq!(same.stdout, std::fs::read(&t).unwrap());
    let loose = eflab(&["readjudicate", t.to_str().unwrap(), "--eps", "10"]);
    let v: Value = serde_json::from_slice(&loose.stdout).unwrap();
    assert_eq!(v["verdict"]["winner"], "player2");
    assert_eq!(v["config"]["epsilon"], 10.0);
}

#[test]
fn eval_writes_a_versioned_report() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("s.cl");
    std::fs::write(&src, "sup x:U. n2(x - one)\n").unwrap();
    let run = || eflab(&["eval", "--algebra", "M2", "--restarts", "4", "--seed", "9", src.to_str().unwrap()]);
    let a = run();
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run().stdout);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(r["schema_version"], 1);
    // sup over unitaries of ‖u − 1‖₂ is 2, at u = −1.
    let v = r["value"].as_f64().unwrap();
    assert!(v <= 2.0 + 1e-12 && v > 1.9, "{v}");
}

#[test]
fn net_of_a_diagonal_span() {
    let o = eflab(&["net", "--algebra", "M2", "--span", "one; diag(1,-1)", "--eps", "0.5", "--samples", "2000", "--seed", "1", "--points"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["net"]["dim"], 2);
    assert_eq!(r["cover"]["passed"], true);
    assert!(r["net"]["max_op_norm"].as_f64().unwrap() < 1.0 - 0.5 / 4.0);
    assert_eq!(r["net"]["points"].as_array().unwrap().len(), r["net"]["size"].as_u64().unwrap() as usize);
}

#[test]
fn verify_writes_one_report_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = eflab(&[
        "verify", "--check", "z4-identity", "--check", "jordan-transpose", "--trials", "30", "--battery", "M2;C+C:1/3,2/3", "--seed", "7",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["passed"], 2);
    assert_eq!(s["failed"], 0);
    for name in ["z4-identity", "jordan-transpose"] {
        let r = read_json(&dir.path().join(format!("{name}.json")));
        assert_eq!(r["pass"], true);
        assert_eq!(r["trials"], 60);
    }
    assert_eq!(code(&eflab(&["verify", "--check", "no-such-check", "--seed", "1"])), 1);
}
