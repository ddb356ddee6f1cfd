use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn avi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avi"))
        .args(args)
        .current_dir(dir)
        .env_remove("PATHAVI_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .to_string()
}

const TRIVIAL: &str = "DIMS 2 0\nROWS\nRHS\nMAT M 2\n0 0 1\n1 1 1\nVEC q\n-1 -1\nBOUNDS\n0 inf\n0 inf\nEND\n";
const ZERO_LCP: &str = "DIMS 1 0\nROWS\nRHS\nMAT M 0\nVEC q\n-1\nBOUNDS\n0 inf\nEND\n";
const DIAMOND: &str = "DIMS 2 4\nROWS\nGE 2 0 1 1 1\nGE 2 0 -1 1 1\nGE 2 0 1 1 -1\nGE 2 0 -1 1 -1\nRHS\n-1 -1 -1 -1\n\
MAT M 2\n0 0 1\n1 1 1\nVEC q\n0 0\nBOUNDS\n-1 1\n-1 1\nEND\n";
const BOX2: &str = "DIMS 2 0\nROWS\nRHS\nMAT M 2\n0 0 1\n1 1 1\nVEC q\n0 0\nBOUNDS\n0 1\n0 1\nEND\n";

#[test]
fn solve_trivial_lcp() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "t.avi", TRIVIAL);
    let o = avi(&["solve", "t.avi", "--print-solution"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    assert_eq!(value(&r, "status"), "solved");
    assert!(value(&r, "iterations").parse::<usize>().unwrap() <= 3);
    assert_eq!(value(&r, "z"), "1.0000000000000000e0,1.0000000000000000e0");
    assert!(!r.contains("wall_time"));
}

#[test]
fn infeasible_lcp_exits_2() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "z.avi", ZERO_LCP);
    let o = avi(&["solve", "z.avi"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(value(&stdout(&o), "interpretation"), "infeasible");
}

#[test]
fn iteration_limit_exits_3() {
    let dir = TempDir::new().unwrap();
    assert_eq!(avi(&["gen", "random", "n=8", "m=2", "--seed", "4", "--out", "r.avi"], dir.path()).status.code(), Some(0));
    let o = avi(&["solve", "r.avi", "--iter-limit", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(value(&stdout(&o), "status"), "iter_limit");
}

#[test]
fn unreadable_and_malformed_inputs() {
    let dir = TempDir::new().unwrap();
    assert_eq!(avi(&["solve", "missing.avi"], dir.path()).status.code(), Some(66));
    write(dir.path(), "bad.avi", &TRIVIAL[..40]);
    let o = avi(&["solve", "bad.avi"], dir.path());
    assert_eq!(o.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn reports_go_to_file_and_are_reproducible() {
    let dir = TempDir::new().unwrap();
    avi(&["gen", "nep", "agents=3", "sizes=2", "--seed", "9", "--out", "g.avi"], dir.path());
    for name in ["a.txt", "b.txt"] {
        let o = avi(&["solve", "g.avi", "--seed", "9", "--out", name], dir.path());
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    let a = std::fs::read(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.txt")).unwrap());
    assert!(String::from_utf8(a).unwrap().contains("seed=9\n"));
}

#[test]
fn json_report() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "t.avi", TRIVIAL);
    let o = avi(&["solve", "t.avi", "--json", "--timings"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "solved");
    assert_eq!(v["route"], "direct");
    assert!(v.get("wall_time_s").is_some());
}

#[test]
fn compare_routes_agree_on_monotone_instance() {
    let dir = TempDir::new().unwrap();
    avi(&["gen", "random", "n=6", "m=0", "spectrum=monotone", "--seed", "3", "--out", "r.avi"], dir.path());
    let o = avi(&["compare", "r.avi"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    assert_eq!(value(&r, "routes_solved"), "3");
    assert_eq!(value(&r, "agree"), "true");
}

#[test]
fn compare_falls_back_to_direct_on_contact_instance() {
    let dir = TempDir::new().unwrap();
    avi(&["gen", "friction", "contacts=3", "condensed=true", "--seed", "1", "--out", "f.avi"], dir.path());
    let o = avi(&["compare", "f.avi", "--route", "direct,mcp"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = stdout(&o);
    assert!(r.contains("route=mcp\nstatus=start_failed\n"));
    assert_eq!(value(&r, "routes_solved"), "1");
}

#[test]
fn usage_errors_exit_64() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "t.avi", TRIVIAL);
    assert_eq!(avi(&["compare", "t.avi", "--route", ""], dir.path()).status.code(), Some(64));
    assert_eq!(avi(&["solve", "t.avi", "--route", "path"], dir.path()).status.code(), Some(64));
    assert_eq!(avi(&["gen", "friction", "mu=0"], dir.path()).status.code(), Some(64));
    assert_eq!(avi(&["frobnicate"], dir.path()).status.code(), Some(64));
    assert_eq!(avi(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn nnf_counts() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "d.avi", DIAMOND);
    write(dir.path(), "b.avi", BOX2);
    assert_eq!(stdout(&avi(&["nnf", "d.avi"], dir.path())), "exact=9 bound=144\n");
    assert_eq!(stdout(&avi(&["nnf", "b.avi"], dir.path())), "exact=9 bound=9\n");
    avi(&["gen", "random", "n=7", "m=0", "--out", "big.avi"], dir.path());
    assert_eq!(stdout(&avi(&["nnf", "big.avi"], dir.path())), "exact=skipped(bound caps) bound=2187\n");
}

#[test]
fn gen_params_file_matches_arguments() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "p.txt", "# two bodies\ncontacts=4\nbodies=2\nfacets=5\n");
    avi(&["gen", "friction", "--params-file", "p.txt", "--seed", "5", "--out", "a.avi"], dir.path());
    avi(&["gen", "friction", "contacts=4", "bodies=2", "facets=5", "seed=5", "--out", "b.avi"], dir.path());
    let a = std::fs::read(dir.path().join("a.avi")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(dir.path().join("b.avi")).unwrap());
}

#[test]
fn pivot_log_goes_to_stderr() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "t.avi", TRIVIAL);
    let o = Command::new(env!("CARGO_BIN_EXE_avi"))
        .args(["solve", "t.avi"])
        .current_dir(dir.path())
        .env("PATHAVI_LOG", "debug")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(!o.stderr.is_empty());
    assert!(!String::from_utf8_lossy(&o.stdout).contains("enter"));
}
