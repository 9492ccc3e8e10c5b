use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lmpkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmpkit")).args(args).output().expect("spawn lmpkit")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &Path, file: &str) -> String {
    dir.join(file).display().to_string()
}

fn example(name: &str, cells: usize, extra: &[&str]) -> TempDir {
    let dir = TempDir::new().unwrap();
    let n = cells.to_string();
    let out_dir = dir.path().display().to_string();
    let mut args = vec!["example", name, "--N", &n, "--out-dir", &out_dir];
    args.extend_from_slice(extra);
    let out = lmpkit(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir
}

fn check(dir: &Path, certificate: &str, extra: &[&str]) -> Output {
    let (p, t, c) = (path(dir, "problem.json"), path(dir, "trajectory.json"), path(dir, certificate));
    let mut args = extra.to_vec();
    args.extend_from_slice(&["check", "--problem", &p, "--trajectory", &t, "--certificate", &c]);
    lmpkit(&args)
}

fn recover(dir: &Path, problem: &str) -> Output {
    let (p, t, o) = (path(dir, problem), path(dir, "trajectory.json"), path(dir, "recovered.json"));
    lmpkit(&["recover", "--problem", &p, "--trajectory", &t, "--out", &o])
}

fn write_cones(dir: &Path, json: &str) -> String {
    let p = path(dir, "cones.json");
    fs::write(&p, json).unwrap();
    p
}

#[test]
fn examples_round_trip_through_check() {
    for (name, extra) in [("ex1", &[][..]), ("ex2", &["--T", "1", "--m", "0.5"][..]), ("ex2", &["--split", "eta-only"][..])] {
        let dir = example(name, 60, extra);
        let out = check(dir.path(), "certificate.json", &[]);
        assert_eq!(code(&out), 0, "{name}: {}", stdout(&out));
        assert!(stdout(&out).contains("overall: PASS"));
    }
}

#[test]
fn flipped_jump_direction_fails_the_check() {
    let dir = example("ex1", 20, &[]);
    let c = path(dir.path(), "certificate.json");
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&c).unwrap()).unwrap();
    doc["s"][0]["vector"] = serde_json::json!([1.0]);
    fs::write(path(dir.path(), "flipped.json"), doc.to_string()).unwrap();
    let out = check(dir.path(), "flipped.json", &[]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("overall: FAIL"));
}

#[test]
fn json_report_is_machine_readable() {
    let dir = example("ex2", 40, &[]);
    let out = check(dir.path(), "certificate.json", &["--format", "json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 11);
    assert_eq!(entries[0]["name"], "alpha0_sign");
    assert_eq!(entries[10]["name"], "stationarity");
}

#[test]
fn report_can_go_to_a_file() {
    let dir = example("ex1", 20, &[]);
    let report = path(dir.path(), "report.txt");
    let out = check(dir.path(), "certificate.json", &[]);
    let (p, t, c) = (path(dir.path(), "problem.json"), path(dir.path(), "trajectory.json"), path(dir.path(), "certificate.json"));
    let to_file = lmpkit(&["check", "--problem", &p, "--trajectory", &t, "--certificate", &c, "--out", &report]);
    assert_eq!(code(&to_file), 0);
    assert_eq!(fs::read_to_string(&report).unwrap(), stdout(&out));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = example("ex1", 20, &[]);
    fs::write(path(dir.path(), "broken.json"), "{ \"alpha0\": ").unwrap();
    let out = check(dir.path(), "broken.json", &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));

    let missing = check(dir.path(), "nope.json", &[]);
    assert_eq!(code(&missing), 2);

    let unknown = lmpkit(&["example", "ex9", "--out-dir", &dir.path().display().to_string()]);
    assert_eq!(code(&unknown), 2);

    let wrong_version = fs::read_to_string(path(dir.path(), "certificate.json")).unwrap().replace("\"1.0\"", "\"9.9\"");
    fs::write(path(dir.path(), "future.json"), wrong_version).unwrap();
    assert_eq!(code(&check(dir.path(), "future.json", &[])), 2);
}

#[test]
fn negative_tolerance_is_rejected() {
    let dir = example("ex1", 10, &[]);
    let p = path(dir.path(), "problem.json");
    let t = path(dir.path(), "trajectory.json");
    let out = lmpkit(&["recover", "--problem", &p, "--trajectory", &t, "--out", &path(dir.path(), "r.json"), "--eps", "-1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn recovery_certifies_both_examples() {
    for name in ["ex1", "ex2"] {
        let dir = example(name, 40, &[]);
        let out = recover(dir.path(), "problem.json");
        assert_eq!(code(&out), 0, "{name}: {}", stdout(&out));
        // The recovered certificate is itself checkable.
        let again = check(dir.path(), "recovered.json", &[]);
        assert_eq!(code(&again), 0, "{name}: {}", stdout(&again));
    }
}

#[test]
fn recovery_reports_a_non_extremal_trajectory() {
    // Lowering the constraint makes it inactive, so only a trivial multiplier fits.
    let dir = example("ex1", 20, &[]);
    let problem = fs::read_to_string(path(dir.path(), "problem.json")).unwrap().replace("- x1 + 1", "- x1 + 2");
    fs::write(path(dir.path(), "inactive.json"), problem).unwrap();
    let out = recover(dir.path(), "inactive.json");
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("LMP not certified"));
}

#[test]
fn recovery_output_is_deterministic() {
    let dir = example("ex2", 30, &[]);
    let first = stdout(&recover(dir.path(), "problem.json"));
    let cert = fs::read_to_string(path(dir.path(), "recovered.json")).unwrap();
    let second = stdout(&recover(dir.path(), "problem.json"));
    assert_eq!(first, second);
    assert_eq!(cert, fs::read_to_string(path(dir.path(), "recovered.json")).unwrap());
}

#[test]
fn cone_spec_verdicts() {
    let dir = TempDir::new().unwrap();
    let disjoint = write_cones(
        dir.path(),
        r#"{"format_version": "1.0", "dim": 2, "cones": [
            {"generators": [[1, 0], [0, 1]], "open": false},
            {"generators": [[-1, 0], [0, -1]], "open": true, "x0": [-1, -1]}
        ]}"#,
    );
    let out = lmpkit(&["cones", &disjoint]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("separated"));

    let overlapping = write_cones(
        dir.path(),
        r#"{"format_version": "1.0", "dim": 2, "cones": [
            {"generators": [[1, 0]], "open": false},
            {"generators": [[1, 1], [1, -1]], "open": true, "x0": [1, 0]}
        ]}"#,
    );
    let out = lmpkit(&["cones", &overlapping]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("cones intersect"));

    let mismatched = write_cones(
        dir.path(),
        r#"{"format_version": "1.0", "dim": 3, "cones": [
            {"generators": [[1, 0]], "open": false},
            {"generators": [[1, 1]], "open": true}
        ]}"#,
    );
    assert_eq!(code(&lmpkit(&["cones", &mismatched])), 2);
    assert_eq!(code(&lmpkit(&["cones"])), 2);
}

#[test]
fn cone_batch_is_consistent() {
    let out = lmpkit(&["--format", "json", "cones", "--seeds", "60"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["instances"], 60);
    assert!(v["inconsistent"].as_array().unwrap().is_empty());
    let degenerate = v["degenerate"].as_array().unwrap().len() as u64;
    assert_eq!(v["consistent"].as_u64().unwrap() + degenerate, 60);
}
