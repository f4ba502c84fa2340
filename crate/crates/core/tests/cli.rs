use std::fs;
use std::io::Write;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_cudfsolve");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PROBLEM: &str = "package: a\nversion: 1\ndepends: b\n\npackage: b\nversion: 1\n\npackage: b\nversion: 2\n\n\
                       request: test\ninstall: a\n";

#[test]
fn solve_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.cudf", PROBLEM);
    let out = dir.path().join("s.cudf");
    let o = cli(&["solve", s(&problem), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("objective: -removed=0 -changed=2"));
    let solution = fs::read_to_string(&out).unwrap();
    assert!(solution.contains("package: a\n"));

    let o = cli(&["check", s(&problem), s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "VALID\n");

    let bad = write(dir.path(), "bad.cudf", "package: a\nversion: 1\ninstalled: true\n");
    let o = cli(&["check", s(&problem), s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("a"));

    let fail = write(dir.path(), "fail.cudf", "FAIL\n");
    assert_eq!(cli(&["check", s(&problem), s(&fail)]).status.code(), Some(1));

    let stranger = write(dir.path(), "x.cudf", "package: zz\nversion: 1\ninstalled: true\n");
    assert_eq!(cli(&["check", s(&problem), s(&stranger)]).status.code(), Some(2));
    assert_eq!(cli(&["check", s(&problem), "/nonexistent"]).status.code(), Some(2));
}

#[test]
fn solve_reads_standard_input_and_reports_failure() {
    let mut child = Command::new(BIN)
        .args(["solve", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"package: a\nversion: 1\nconflicts: a\ndepends: b\n\nrequest: x\ninstall: a\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "FAIL\n");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.cudf", PROBLEM);
    assert_eq!(cli(&["solve", s(&problem), "--criteria", "-bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["solve", s(&problem), "--criteria", ""]).status.code(), Some(2));
    let broken = write(dir.path(), "broken.cudf", "package: a\n");
    let o = cli(&["solve", s(&broken)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn oracle_agrees_with_solve() {
    let merlin = fixtures().join("merlin.cudf");
    for criteria in ["paranoid", "-changed,-removed", "trendy"] {
        let a = cli(&["solve", s(&merlin), "--criteria", criteria]);
        let b = cli(&["oracle", s(&merlin), "--criteria", criteria]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(b.status.code(), Some(0));
        let vector = |o: &Output| stderr(o).lines().find(|l| l.starts_with("objective:")).unwrap().to_string();
        assert_eq!(vector(&a), vector(&b), "{criteria}");
    }
    let o = cli(&["oracle", s(&merlin), "--cap", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--size", "30", "--seed", "9", "--kind", "upgrade"];
    let a = cli(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&cli(&args)));
    assert_ne!(stdout(&a), stdout(&cli(&["gen", "--size", "30", "--seed", "10", "--kind", "upgrade"])));
    assert!(stdout(&a).contains("upgrade:"));
}

#[test]
fn sat_on_dimacs() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "a.cnf", "c example\np cnf 3 3\n1 2 0\n-1 0\n-2 3 0\n");
    let o = cli(&["sat", s(&sat)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "s SATISFIABLE\nv -1 2 3 0\n");
    let unsat = write(dir.path(), "b.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    let o = cli(&["sat", s(&unsat)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "s UNSATISFIABLE\n");
    let garbage = write(dir.path(), "c.cnf", "p cnf x\n");
    assert_eq!(cli(&["sat", s(&garbage)]).status.code(), Some(2));
}

#[test]
fn translate_and_lock() {
    let semver = fixtures().join("semver");
    let registry = semver.join("registry");
    let manifest = semver.join("manifest.json");
    let o = cli(&["translate", s(&manifest), "--registry", s(&registry)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("package: root--app\n"));
    assert!(stdout(&o).contains("install: root--app\n"));

    let o = cli(&["lock", s(&manifest), "--registry", s(&registry)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lock: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let aiohttp: cudfsolve::semver::SemverVersion = lock["resolved"]["aiohttp"].as_str().unwrap().parse().unwrap();
    let range: cudfsolve::semver::RangeExpr = ">= 3.8.0, < 4.0.0".parse().unwrap();
    assert!(cudfsolve::semver::range_matches(&range, &aiohttp));

    let lock_old = semver.join("lock-old.json");
    let o = cli(&[
        "lock",
        s(&manifest),
        "--registry",
        s(&registry),
        "--lock",
        s(&lock_old),
        "--upgrade",
        "--criteria",
        "-removed,-changed",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = cli(&["lock", s(&semver.join("manifest-missing.json")), "--registry", s(&registry)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nothing provides nonexistent"), "{}", stderr(&o));
}

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = write(dir, name, &format!("#!/bin/sh\n{body}\n"));
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

#[test]
fn external_solver_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write(dir.path(), "p.cudf", PROBLEM);
    let bridge = format!("{BIN} bridge");
    let o = cli(&["solve", s(&problem), "--criteria", "-changed", "--external", &bridge]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), stdout(&cli(&["solve", s(&problem), "--criteria", "-changed"])));

    let slow = script(dir.path(), "slow.sh", "sleep 5");
    let o = cli(&["solve", s(&problem), "--external", s(&slow), "--timeout", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("timed out"));

    let crash = script(dir.path(), "crash.sh", "exit 7");
    let o = cli(&["solve", s(&problem), "--external", s(&crash)]);
    assert_eq!(o.status.code(), Some(2));

    let liar = script(dir.path(), "liar.sh", "printf 'package: a\\nversion: 1\\ninstalled: true\\n' > \"$2\"");
    let o = cli(&["solve", s(&problem), "--external", s(&liar)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid solution"));

    let giving_up = script(dir.path(), "fail.sh", "echo FAIL > \"$2\"; exit 1");
    let o = cli(&["solve", s(&problem), "--external", s(&giving_up)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "FAIL\n");
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = cli(&["bench", "--sizes", "20,40", "--seeds", "1,2", "--csv", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(cudfsolve::bench::CSV_HEADER));
    assert_eq!(lines.count(), 4);
}
