//! End-to-end runs of the `qm` binary: exit codes, report files, CSV output
//! and determinism.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const Q3: &str = r#"{"points": [0, 1, 2], "d": [[0, 1, 2], [2, 0, 1], [1, 1, 0]]}"#;
const BROKEN: &str = r#"{"points": [0, 1, 2], "d": [[0, 1, 3], [1, 0, 1], [3, 1, 0]]}"#;

fn qm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QM_OUT")
        .output()
        .expect("qm runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn validate_accepts_q3() {
    let tmp = TempDir::new().unwrap();
    let space = write(tmp.path(), "q3.json", Q3);
    let out = qm(tmp.path(), &["validate", "--space", &space]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(tmp.path(), "validate");
    assert_eq!(r["pass"], true);
    assert_eq!(r["checks"][0]["details"]["violations"], serde_json::json!([]));
}

#[test]
fn validate_reports_the_triangle_witness() {
    let tmp = TempDir::new().unwrap();
    let space = write(tmp.path(), "broken.json", BROKEN);
    let out = qm(tmp.path(), &["validate", "--space", &space]);
    assert_eq!(out.status.code(), Some(1));
    let v = &report(tmp.path(), "validate")["checks"][0]["details"]["violations"];
    let witnesses: Vec<&Value> = v.as_array().unwrap().iter().map(|x| &x["witness"]).collect();
    assert!(witnesses.contains(&&serde_json::json!([0, 1, 2])), "{v}");
}

#[test]
fn reproduce_builtins_pass() {
    let tmp = TempDir::new().unwrap();
    for name in ["q3-shift", "randers-line"] {
        let out = qm(tmp.path(), &["reproduce", name]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert_eq!(report(tmp.path(), name)["pass"], true);
    }
}

#[test]
fn distance_csv_matches_the_closed_form() {
    let tmp = TempDir::new().unwrap();
    let out = qm(tmp.path(), &["distance", "--pair", "0:1", "--pair", "1:0", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("x,y,estimate,oracle,abs_error"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(&row[..2], &[0.0, 1.0]);
    assert!((row[2] - std::f64::consts::FRAC_PI_4).abs() < 1e-3);
    assert!(tmp.path().join("distance-distance.csv").exists());
}

#[test]
fn distance_tolerance_failure_exits_one() {
    let tmp = TempDir::new().unwrap();
    // an off-stencil direction on a coarse graph misses the straight-line value
    let args = ["distance", "--structure", "euclidean-plane", "--pair", "0,0:1,0.3", "--grid", "8", "--tol", "1e-12"];
    let out = qm(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(1));
    let r = report(tmp.path(), "distance");
    assert_eq!(r["pass"], false);
    assert!(r["checks"][0]["details"]["max_abs_error"].as_f64().unwrap() > 1e-12);
}

#[test]
fn almostiso_certifies_and_enumerates() {
    let tmp = TempDir::new().unwrap();
    let x = write(tmp.path(), "x.json", Q3);
    let out = qm(tmp.path(), &["almostiso", "--x", &x, "--y", &x, "--map", "[0, 1, 2]"]);
    assert_eq!(out.status.code(), Some(0));
    let cert = &report(tmp.path(), "almostiso")["checks"][0]["details"]["certification"];
    assert_eq!(cert["verdict"], "accepted");
    assert_eq!(cert["strict"], true);
    let out = qm(tmp.path(), &["almostiso", "--x", &x, "--y", &x, "--enumerate"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(tmp.path(), "almostiso")["checks"][0]["details"]["count"].as_u64().unwrap() >= 1);
}

#[test]
fn slip_and_transform_subcommands() {
    let tmp = TempDir::new().unwrap();
    let space = write(tmp.path(), "q3.json", Q3);
    let out = qm(tmp.path(), &["slip", "--space", &space, "--field", "[0, 0.5, 0.2]"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(tmp.path(), "slip")["checks"][0]["details"]["forward"], 0.5);

    let spec = write(tmp.path(), "t.json", r#"{"c": 2, "tau": [2, 0, 1], "phi": [0.5, -1, 0]}"#);
    let out = qm(tmp.path(), &["transform", &spec, "--field", "[1, 2, 3]", "--random", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn invalid_input_exits_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{"schema": 1, "name": "bad", "checks": [{"kind": "validate"}]}"#);
    let out = qm(tmp.path(), &["run", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("space"), "{}", String::from_utf8_lossy(&out.stderr));

    let dangling = write(
        tmp.path(),
        "dangling.json",
        r#"{"schema": 1, "name": "dangling", "checks": [{"kind": "validate", "space": "missing"}]}"#,
    );
    assert_eq!(qm(tmp.path(), &["run", &dangling]).status.code(), Some(2));
    assert_eq!(qm(tmp.path(), &["validate", "--space", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(qm(tmp.path(), &["reproduce", "nope"]).status.code(), Some(2));
    assert_eq!(qm(tmp.path(), &["reproduce", "q3-shift", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(qm(a.path(), &["reproduce", "q3-shift", "--threads", "1"]).status.code(), Some(0));
    assert_eq!(qm(b.path(), &["reproduce", "q3-shift", "--threads", "4"]).status.code(), Some(0));
    let read = |d: &TempDir| std::fs::read(d.path().join("q3-shift.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn environment_overrides_out_dir() {
    let flag = TempDir::new().unwrap();
    let env = TempDir::new().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_qm"))
        .args(["reproduce", "q3-shift", "--out"])
        .arg(flag.path())
        .env("QM_OUT", env.path())
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert!(env.path().join("q3-shift.json").exists());
    assert!(!flag.path().join("q3-shift.json").exists());
}

#[test]
fn scenario_file_round_trip() {
    let tmp = TempDir::new().unwrap();
    let text = r#"{
        "schema": 1, "name": "custom", "seed": 3,
        "spaces": {"q3": {"points": [0, 1, 2], "d": [[0, 1, 2], [2, 0, 1], [1, 1, 0]]}},
        "fields": {"phi": [0, 0.5, 0.2]},
        "checks": [
            {"kind": "shift", "space": "q3", "phi": "phi", "as": "moved"},
            {"kind": "certify", "name": "id", "x": "q3", "y": "moved", "expect_strict": true, "base_points": [0, 2]},
            {"kind": "smooth", "field": {"min": -1, "max": 1, "values": [0, 0, 0, 0.5, 1]}, "eps": 0.1, "r": 0.05}
        ]
    }"#;
    let path = write(tmp.path(), "custom.json", text);
    let out = qm(tmp.path(), &["run", &path, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("kind,name,pass\nshift,shift-0,true\n"));
    let r = report(tmp.path(), "custom");
    assert_eq!(r["checks"][1]["name"], "id");
    assert_eq!(r["seed"], 3);
}
