use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tracechain"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

const FLAT4: &str = r#"{"schema_version": 1, "scale": {"kind": "identity"}, "speed": {"kind": "lebesgue"},
 "partition": {"kind": "uniform", "n": 4}}"#;

#[test]
fn build_flat_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT4);
    let out = run("build", &cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(dir.path().join("chain.json"));
    assert_eq!(doc["result"]["conductances"], serde_json::json!([2.0, 2.0, 2.0]));
    assert_eq!(doc["config"]["partition"]["n"], 4);
    assert_eq!(doc["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(doc["provenance"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn build_svc_depth_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "scale": {"kind": "fat_cantor", "depth": 8}, "speed": {"kind": "lebesgue"},
            "partition": {"kind": "svc_endpoints", "depth": 1}}"#,
    );
    assert!(run("build", &cfg, dir.path(), &[]).status.success());
    let doc = read_json(dir.path().join("chain.json"));
    let points: Vec<f64> = serde_json::from_value(doc["result"]["partition"].clone()).unwrap();
    assert_eq!(&points[..3], &[0.0, 0.375, 0.625]);
}

#[test]
fn missing_speed_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\"schema_version\": 1,\n \"scale\": {\"kind\": \"identity\"}}");
    let out = run("build", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("speed") && err.contains("line 2"), "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "scale": {"kind": "identity"}, "speed": {"kind": "lebesgue", "rho": 2}}"#,
    );
    assert_eq!(run("build", &cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn missing_config_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("build", &dir.path().join("nope.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn zero_mass_fixture_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("verify", &shipped("zero_mass.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("zero") || err.contains("mass"), "{err}");
}

#[test]
fn verify_flat_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("verify", &shipped("flat.json"), dir.path(), &["--no-timestamp"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("PASS capacity_bound_T1"), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    let doc = read_json(dir.path().join("verify.json"));
    assert_eq!(doc["result"]["passed"], true);
}

#[test]
fn failed_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema_version": 1, "scale": {"kind": "piecewise_linear", "points": [[0, 0], [0.3, 0.7], [1, 1.3]]},
            "speed": {"kind": "piecewise", "breaks": [0, 0.37, 1], "density": [1.7, 0.3], "atoms": [[0.51, 0.13]]},
            "partition": {"kind": "uniform", "n": 23},
            "verify": {"tolerance": 0.0, "capacity_replicas": 100, "dynkin_replicas": 100}}"#,
    );
    let out = run("verify", &cfg, dir.path(), &["--no-timestamp"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("verify.json").exists());
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = shipped("flat.json");
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let out = run("simulate", &cfg, dir.path(), &["--no-timestamp", "--seed", "5", "--threads", threads]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["path_0000.csv", "path_0001.csv", "stats.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let csv = fs::read_to_string(a.path().join("path_0000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,state_index,state_position"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0.0000000000000000e0");
    let doc = read_json(a.path().join("stats.json"));
    assert_eq!(doc["provenance"]["seed"], 5);
    assert!(doc["provenance"].get("generated_unix").is_none());
}

#[test]
fn converge_flat_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("converge", &shipped("flat.json"), dir.path(), &["--no-timestamp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("convergence_u0_l0.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(csv.lines().next(), Some("n,err_L2,err_E1,energy_n,energy_continuum"));
    assert_eq!(rows.len(), 3);
    assert!(rows[0][1] > rows[1][1] && rows[1][1] > rows[2][1]);
    assert!(rows[0][2] > rows[1][2] && rows[1][2] > rows[2][2]);
    let doc = read_json(dir.path().join("converge.json"));
    let bounds = &doc["result"]["energy_bounds"][0]["report"];
    assert_eq!(bounds["bounded"], true);
    assert_eq!(bounds["monotone"], true);
}
