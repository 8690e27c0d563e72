use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tramor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tramor")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.display().to_string()
}

const SMALL: &str = r#"{
  "model": { "grid": { "n": 64 }, "t_end": 0.3, "integrator": { "tau": 0.01 } },
  "rom": { "integrator": { "tau": 0.01 } },
  "analysis": { "sweep": { "c_min": -1.0, "c_max": 1.0, "c_step": 0.5, "pod_ranks": [3] } }
}"#;

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn unknown_enum_variant_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{ "model": { "kind": "heat" } }"#);
    let o = tramor(&["fom", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("model.kind"), "{}", stderr(&o));
}

#[test]
fn unknown_field_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{ "model": { "speed": 1.0 } }"#);
    let o = tramor(&["fom", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn validation_error_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{ "offline": { "rank": 0, "frames": [{ "transform": "periodic_shift", "path": { "source": "analytic", "offset": 0.0, "speed": 1.0 }, "rank": 0 }] } }"#);
    let o = tramor(&["offline", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("rank"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_exits_with_config_code() {
    let tmp = TempDir::new().unwrap();
    let o = tramor(&["fom", "--config", "does-not-exist.json"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn zero_initial_condition_is_a_numerical_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "zero.json",
        r#"{ "model": { "grid": { "n": 64 }, "t_end": 0.2, "integrator": { "tau": 0.01 }, "initial_condition": { "amplitude": 0.0 } } }"#,
    );
    let o = tramor(&["offline", "--config", &cfg, "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn repeated_recipe_runs_write_identical_tables() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = tramor(&["repro", "wave", "--out", out, "--gnuplot"], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("effective config"));
    }
    let (a, b) = (csv_files(&tmp.path().join("a")), csv_files(&tmp.path().join("b")));
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert!(tmp.path().join("a/metrics.dat").exists());
}

#[test]
fn stages_chain_through_binary_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let o = tramor(&["fom", "--config", &cfg, "--out", "fom"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tramor(&["offline", "--config", &cfg, "--out", "off", "--snapshots", "fom/snapshots.bin"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tramor(
        &["rom", "--config", &cfg, "--out", "rom", "--snapshots", "fom/snapshots.bin", "--decomposition", "off/decomposition.bin"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("rom/report.csv")).unwrap();
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    let online: f64 = row[1].parse().unwrap();
    assert!(online < 0.1, "online error {online}");
    assert!(tmp.path().join("rom/trajectory.csv").exists());
}

#[test]
fn mismatched_snapshots_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    assert!(tramor(&["fom", "--config", &cfg, "--out", "fom"], tmp.path()).status.success());
    let o = tramor(&["offline", "--out", "off", "--snapshots", "fom/snapshots.bin"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn sweep_runs_in_parallel_and_records_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let o = tramor(&["sweep", "--config", &cfg, "--out", "sw", "--jobs", "2", "--seed", "7"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let errors = fs::read_to_string(tmp.path().join("sw/sweep_errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 5);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("sw/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["jobs"], 2);
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["timestamp"].is_u64());
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(files.contains(&"sweep_errors.csv") && files.contains(&"config.json"));
}

#[test]
fn unknown_recipe_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let o = tramor(&["repro", "heat"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}
