use std::path::Path;
use std::process::{Command, Output};

fn kgstark(args: &[&str], config: Option<&str>, dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kgstark"));
    cmd.args(args).arg("--out").arg(dir.join("runs"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn only_run_dir(dir: &Path) -> std::path::PathBuf {
    let mut entries: Vec<_> = std::fs::read_dir(dir.join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    entries.pop().unwrap()
}

#[test]
fn config_errors_map_to_exit_codes() {
    let cases = [
        ("{\"params\": ", 2),
        ("[1, 2]", 2),
        (r#"{"params": {"mass": 1}}"#, 3),
        (r#"{"field": {"kind": "constant", "e1": [1]}}"#, 3),
        (r#"{"params": {"m": 0}}"#, 4),
        (r#"{"experiment": "decay"}"#, 4),
        (r#"{"times": {"start": 10, "end": 1}}"#, 4),
    ];
    for (text, code) in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = kgstark(&["simulate"], Some(text), dir.path());
        assert_eq!(out.status.code(), Some(code), "{text}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!dir.path().join("runs").exists());
    }
    let dir = tempfile::tempdir().unwrap();
    let out = kgstark(&["simulate", "--workers", "0"], None, dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_config_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kgstark"))
        .args(["decay", "--config"])
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_field_simulation_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"field": {"kind": "constant", "e0": [0]}, "times": {"end": 100, "count": 12}}"#;
    let out = kgstark(&["simulate", "--workers", "2"], Some(config), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = only_run_dir(dir.path());
    assert!(run.file_name().unwrap().to_string_lossy().starts_with("simulate-"));
    for name in ["config.json", "summary.json", "summary.txt", "final_state.bin", "final_state.csv"] {
        assert!(run.join(name).exists(), "{name}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
    let digest = summary["digest"].as_str().unwrap();
    assert!(run.to_string_lossy().ends_with(&digest[..16]));
}

#[test]
fn sinusoidal_audit_is_data_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"field": {"kind": "sinusoidal", "gamma": 0.5, "coeff": 1, "amplitude": 1, "frequency": 1}}"#;
    let out = kgstark(&["audit-e1"], Some(config), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let run = only_run_dir(dir.path());
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["result"]["verdict"], "FAIL");
    for name in ["e0.csv", "e1.csv", "b_norm.csv"] {
        assert!(run.join(name).exists(), "{name}");
    }
}

#[test]
fn sinusoidal_decay_carries_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "experiment": "decay",
        "field": {"kind": "sinusoidal", "gamma": 0.5, "coeff": 1, "amplitude": 1, "frequency": 1},
        "times": {"end": 100, "count": 24}
    }"#;
    let out = kgstark(&["decay"], Some(config), dir.path());
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(only_run_dir(dir.path()).join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["e1_audit"]["verdict"], "FAIL");
    assert!(summary["warning"].as_str().unwrap().contains("E1"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("WARNING"));
}

#[test]
fn every_subcommand_accepts_the_shared_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_kgstark")).arg("--help").output().unwrap();
    let help = String::from_utf8_lossy(&out.stdout);
    for sub in ["simulate", "stability", "instability", "decay", "energy", "audit-e1", "bench"] {
        assert!(help.contains(sub), "{sub}");
        let out = Command::new(env!("CARGO_BIN_EXE_kgstark")).args([sub, "--help"]).output().unwrap();
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in ["--config", "--out", "--workers"] {
            assert!(text.contains(flag), "{sub} {flag}");
        }
    }
}
