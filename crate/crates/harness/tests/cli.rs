use std::path::Path;
use std::process::{Command, Output};

use jsantalo_harness::report::ExperimentReport;

fn jsantalo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jsantalo")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn j1_campaigns_are_refused() {
    for cmd in ["verify-santalo", "symmetrize", "search"] {
        let out = jsantalo(&[cmd, "--j", "1"]);
        assert_eq!(out.status.code(), Some(1), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("j = 1"));
    }
}

#[test]
fn bad_arguments_exit_with_error() {
    assert_eq!(jsantalo(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(jsantalo(&["volume", "/nonexistent/file"]).status.code(), Some(1));
}

#[test]
fn reports_are_written_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = jsantalo(&["verify-santalo", "--tuples", "6", "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        ExperimentReport::read(&out.join("verify-santalo.json")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.hash, b.hash);
    assert_eq!(a.hash, a.content_hash());
    assert_eq!(a.config["seed"], 11);
    let csv = std::fs::read_to_string(dir.path().join("a/verify-santalo.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 3\n[verify_santalo]\ncase = \"j-equals-k\"\nj = 3\nk = 3\ntuples = 4\n");
    let out = dir.path().join("o");
    let o = jsantalo(&["verify-santalo", "--config", &cfg, "--tuples", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = ExperimentReport::read(&out.join("verify-santalo.json")).unwrap();
    assert_eq!(r.cases.len(), 2);
    assert_eq!(r.config["seed"], 3);
    assert_eq!(r.summary.aggregates["bound_constant"], 1.0);
    let bad = write(dir.path(), "bad.toml", "[verify_santalo]\ncases = 3\n");
    assert_eq!(jsantalo(&["verify-santalo", "--config", &bad]).status.code(), Some(1));
}

#[test]
fn polar_of_the_square_is_the_cross_polytope() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "sq.txt", "2 2\n1 1\n1 -1\n");
    let out = dir.path().join("polar.txt");
    let o = jsantalo(&["polar", "--j", "2", &sq, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let p = jsantalo::bodies::read_polytope(&out).unwrap();
    assert!((p.hull().unwrap().volume() - 2.0).abs() < 1e-12);
    let vol = jsantalo(&["volume", &sq, out.to_str().unwrap()]);
    assert_eq!(vol.status.code(), Some(0));
    let ball = jsantalo(&["ball", "--j", "2", &sq, out.to_str().unwrap()]);
    assert_eq!(ball.status.code(), Some(0), "{}", String::from_utf8_lossy(&ball.stderr));
}
