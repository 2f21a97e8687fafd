//! Every example runs to completion on small inputs.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    let mut dir = std::env::current_exe().unwrap();
    dir.pop();
    if dir.ends_with("deps") {
        dir.pop();
    }
    dir.join("examples").join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

fn run(name: &str, args: &[&str]) -> String {
    let o = Command::new(example(name)).args(args).output().expect("example binary exists");
    assert!(o.status.success(), "{name} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn algebra_relations() {
    let out = run("algebra_relations", &[]);
    assert!(out.contains("u u* + v v*  =  1"));
    assert!(out.contains("reassembled equals x: true"));
}

#[test]
fn truncated_norms() {
    assert!(run("truncated_norms", &["u + v"]).contains("1.41421356"));
}

#[test]
fn block_commutator() {
    assert!(run("block_commutator", &["2", "32"]).contains("mu = 0.25"));
}

#[test]
fn bpp_sweep() {
    assert!(run("bpp_sweep", &["3", "32"]).contains("fitted slope"));
}

#[test]
fn construct_pair() {
    assert!(run("construct_pair", &["0.5", "32"]).contains("target met: Some(true)"));
}

#[test]
fn solve_system() {
    assert!(run("solve_system", &["3", "64"]).contains("largest row residual"));
}

#[test]
fn scan_scaling() {
    assert!(run("scan_scaling", &["2", "3", "32"]).starts_with("epsilon_target,n,"));
}

#[test]
fn verify_suites() {
    assert!(run("verify_suites", &["relations", "64"]).contains("\"pass\": true"));
}
