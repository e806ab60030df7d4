use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kslab::output::verify_manifest;

const SYSTEM: &str = "[system]\ndim = 3\nalpha = 2.5\nf0 = 2.0\nradius = 0.5\nrho = 0.1\nc0 = 1.0\n";
const SMALL: &str = "[mesh]\ns_max = 4.0\ncells = 128\nratio = 1.1\n";

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn kslab(args: &[&str], config: &Path, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kslab"));
    cmd.args(args).arg("--config").arg(config);
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().unwrap()
}

fn manifest_state(out: &Path) -> serde_json::Value {
    let text = fs::read_to_string(out.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["status"].clone()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = kslab(&["validate"], &write_config(dir.path(), SYSTEM), None);
    assert_eq!(ok.status.code(), Some(0));

    let low = kslab(&["validate"], &write_config(dir.path(), &SYSTEM.replace("f0 = 2.0", "f0 = 1.0")), None);
    assert_eq!(low.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&low.stdout).contains("1.2"));

    let missing = kslab(&["validate"], &write_config(dir.path(), &SYSTEM.replace("alpha = 2.5\n", "")), None);
    assert_eq!(missing.status.code(), Some(1));

    let absent = kslab(&["validate"], &dir.path().join("nowhere.toml"), None);
    assert_eq!(absent.status.code(), Some(1));
}

#[test]
fn usage_errors_are_config_errors() {
    let out = Command::new(env!("CARGO_BIN_EXE_kslab")).arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SYSTEM}{SMALL}[solver]\nepsilon = 0.01\nt_end = 0.002\noutput_count = 4\n");
    let config = write_config(dir.path(), &cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(kslab(&["simulate"], &config, Some(&a)).status.code(), Some(0));
    assert_eq!(kslab(&["simulate"], &config, Some(&b)).status.code(), Some(0));
    for name in ["snapshot_t0.000000000.csv", "snapshot_t0.001000000.csv", "snapshot_t0.002000000.csv", "indicators.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
    }
    let snap = fs::read_to_string(a.join("snapshot_t0.002000000.csv")).unwrap();
    assert!(snap.starts_with("s,W\n"));
    assert_eq!(snap.lines().count(), 130);
    assert!(verify_manifest(&a).unwrap().is_empty());
    assert_eq!(manifest_state(&a)["state"], "ok");
}

#[test]
fn simulate_sweep_writes_run_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SYSTEM}{SMALL}[solver]\neps_list = [0.1, 0.01, 0.001]\nt_end = 0.002\noutput_count = 2\n");
    let out = dir.path().join("sweep");
    let res = kslab(&["simulate", "--threads", "2"], &write_config(dir.path(), &cfg), Some(&out));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for d in ["run_eps1.000e-1", "run_eps1.000e-2", "run_eps1.000e-3"] {
        assert!(out.join(d).join("snapshot_t0.002000000.csv").exists(), "{d}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep_report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 3);
    assert!(report["monotonicity"]["max_violation"].as_f64().unwrap() <= 1e-6);
    assert!(verify_manifest(&out).unwrap().is_empty());
}

#[test]
fn solver_failure_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SYSTEM}{SMALL}[solver]\nepsilon = 0.01\nt_end = 0.002\nmax_steps = 1\n");
    let out = dir.path().join("fail");
    let res = kslab(&["simulate"], &write_config(dir.path(), &cfg), Some(&out));
    assert_eq!(res.status.code(), Some(3));
    let status = manifest_state(&out);
    assert_eq!(status["state"], "failed");
    assert_eq!(status["exit_code"], 3);
}

#[test]
fn lemma_grid_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let default = dir.path().join("default");
    let res = kslab(&["verify-lemmas"], &write_config(dir.path(), SYSTEM), Some(&default));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(default.join("lemma_checks.csv")).unwrap();
    assert_eq!(table.lines().count(), 101);
    assert!(default.join("margins/tuple_000.csv").exists());

    let tuple = |delta: f64| {
        format!("[[lemmas.grid]]\ndim = 3\nalpha = 2.5\nf0 = 2.0\nradius = 0.5\nrho = 0.1\nxi = 4.0\ndelta = {delta}\ngamma = 20.0\n")
    };
    let bad = format!("{SYSTEM}{}{}", tuple(0.8), tuple(0.5));
    let out = dir.path().join("bad");
    let res = kslab(&["verify-lemmas"], &write_config(dir.path(), &bad), Some(&out));
    assert_eq!(res.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&res.stderr).contains("[1]"));
    let table = fs::read_to_string(out.join("lemma_checks.csv")).unwrap();
    let row = table.lines().nth(2).unwrap();
    assert!(row.contains(",false,") && row.contains("c2"), "{row}");
    assert!(out.join("margins/tuple_000.csv").exists());
    assert!(!out.join("margins/tuple_001.csv").exists());

    let empty = format!("{SYSTEM}[lemmas]\ngrid = []\n");
    let res = kslab(&["verify-lemmas"], &write_config(dir.path(), &empty), Some(&dir.path().join("empty")));
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn blowup_gates() {
    let dir = tempfile::tempdir().unwrap();
    let low = SYSTEM.replace("f0 = 2.0", "f0 = 1.0");
    let out = dir.path().join("low");
    let res = kslab(&["blowup"], &write_config(dir.path(), &low), Some(&out));
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());

    let capped = format!("{SYSTEM}{SMALL}[blowup]\neps_list = [0.01]\ngamma_cap = 1000.0\n");
    let out = dir.path().join("capped");
    let res = kslab(&["blowup"], &write_config(dir.path(), &capped), Some(&out));
    assert_eq!(res.status.code(), Some(5), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(manifest_state(&out)["exit_code"], 5);
}
