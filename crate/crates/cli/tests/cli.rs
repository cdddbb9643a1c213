use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn specq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specq"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env_remove("SPECQ_THREADS")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn metric_prints_sqrt2_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = specq(dir.path(), &["metric", "--a", "[[0],[2]]", "--b", "[[1],[1]]"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("G = 1.41421356"), "{}", stdout(&o));
    let m = read_json(dir.path().join("manifest.json"));
    assert_eq!(m["format"], "specq-manifest");
    assert_eq!(m["version"], 1);
    assert_eq!(m["seed"], 0);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn enneper_report_fields_and_bit_identical_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(specq(a.path(), &["enneper", "--h", "1/16"]).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_specq"))
        .arg("--out")
        .arg(b.path())
        .args(["enneper", "--h", "1/16"])
        .env("SPECQ_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let r = read_json(a.path().join("report.json"));
    for key in ["E_special", "E_classical_pair", "E_competitor", "I_profile"] {
        assert!(!r[key].is_null(), "missing {key}");
    }
    assert!(r["E_competitor"].as_f64().unwrap() < r["E_classical_pair_exact"].as_f64().unwrap());
    for f in ["report.json", "profile.csv", "field.json", "density.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn verify_metric_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = specq(dir.path(), &["verify", "--suite", "metric"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("metric         PASS"));
}

#[test]
fn unknown_suite_and_subcommand_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(specq(dir.path(), &["verify", "--suite", "nope"]).status.code(), Some(2));
    let o = specq(dir.path(), &["frobnicate"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn malformed_spec_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"sheets\": [[{\"vars\": 2, \"terms\": [[1, [1, 0]]]}],\n  oops\n}\n").unwrap();
    let o = specq(dir.path(), &["graphs", "mass", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn bad_coefficient_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"sheets": [[{"vars": 2, "terms": [["1/0", [1, 0]]]}]]}"#).unwrap();
    let o = specq(dir.path(), &["graphs", "mass", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sheets[0][0].terms[0]"));
}

#[test]
fn graphs_taylor_and_excess_pass_on_sample_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = config("enneper_sheets.json");
    assert!(specq(dir.path(), &["graphs", "taylor", "--spec", &spec]).status.success());
    assert!(specq(dir.path(), &["graphs", "excess", "--spec", &spec, "--eps", "1/4,1/8,1/16"]).status.success());
    let fit = read_json(dir.path().join("taylor.json"));
    assert!(fit["slope"].as_f64().unwrap() >= 3.8);
}

#[test]
fn graphs_variation_and_reparam() {
    let dir = tempfile::tempdir().unwrap();
    let spec = config("enneper_sheets.json");
    let test = config("test_map.json");
    assert!(specq(dir.path(), &["graphs", "variation", "--spec", &spec, "--test", &test, "--eps", "1/4,1/8,1/16"]).status.success());
    assert!(specq(dir.path(), &["graphs", "reparam", "--spec", &spec, "--theta", "-0.05", "--s", "0.4"]).status.success());
    let r = read_json(dir.path().join("reparam.json"));
    assert!(r["mass_rel_diff"].as_f64().unwrap() < 1e-4);
}

#[test]
fn minimize_then_frequency_on_saved_field() {
    let dir = tempfile::tempdir().unwrap();
    assert!(specq(dir.path(), &["minimize", "--problem", "random:3", "--h", "1/16"]).status.success());
    let field = dir.path().join("field.json");
    let freq = dir.path().join("freq");
    let o = Command::new(env!("CARGO_BIN_EXE_specq"))
        .arg("--out")
        .arg(&freq)
        .args(["frequency", "--no-solve", "--field", field.to_str().unwrap(), "--radii", "0.2:0.8:5"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(freq.join("profile.csv")).unwrap();
    assert!(csv.starts_with("r,D,H,I\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn luckhaus_and_extend_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(specq(dir.path(), &["luckhaus", "--angles", "64"]).status.success());
    let o = specq(dir.path(), &["extend", "--data", &config("extend_sites.json"), "--h", "1/4"]);
    assert!(o.status.success());
    let e = read_json(dir.path().join("extension.json"));
    assert!(e["data_lipschitz"].as_f64().unwrap() > 0.0);
    assert_eq!(fs::read_to_string(dir.path().join("extension.csv")).unwrap().lines().count(), 26);
}
