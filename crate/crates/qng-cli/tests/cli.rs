//! End-to-end checks of the qng-certify binary: exit codes, output schema,
//! and byte-level reproducibility.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qng-certify"))
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

#[test]
fn threshold_command_writes_csv_and_sidecar() {
    let dir = std::env::temp_dir().join("qng_cli_test_threshold");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    write(
        &cfg,
        r#"{
            "target": {"family": "fock_pair", "theta": 0.7853981633974483, "n": 1},
            "kind": "both",
            "optimizer": {"restarts": 2, "max_evals": 1200},
            "escalation": {"start": 6, "stop": 11},
            "seed": 9,
            "output": "OUT"
        }"#
        .replace("OUT", dir.join("row.csv").to_str().unwrap())
        .as_str(),
    );
    let out = bin()
        .args(["threshold", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    // Exit 0 on success, 2 when an escalation did not converge (results are
    // still written); the toy escalation window here may stop unconverged.
    let code = out.status.code().unwrap();
    assert!(
        code == 0 || code == 2,
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(dir.join("row.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_value,threshold_passive,threshold_gaussian,eta_min,converged_passive,converged_gaussian"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let t_o: f64 = row[1].parse().unwrap();
    let t_g: f64 = row[2].parse().unwrap();
    assert!((t_o - 0.9330127018922194).abs() < 1e-6);
    assert!(t_g >= t_o - 2e-4 && t_g < 1.0);
    assert_eq!(row[4], "true");
    // Exit code 2 exactly when a converged flag is false.
    assert_eq!(code == 2, row[5] == "false", "code {code} vs row {row:?}");

    // Sidecar carries provenance.
    let sidecar = std::fs::read_to_string(dir.join("row.csv.provenance.json")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
    assert_eq!(meta["command"], "threshold");
    assert_eq!(meta["seed"], 9);
    assert!(meta["rows"][0]["gaussian"]["cutoff_trace"].is_array());

    // Byte-identical rerun.
    let first = std::fs::read(dir.join("row.csv")).unwrap();
    let out2 = bin()
        .args(["threshold", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out2.status.code().unwrap(), code);
    assert_eq!(first, std::fs::read(dir.join("row.csv")).unwrap());
}

#[test]
fn sweep_rows_and_json_format() {
    let dir = std::env::temp_dir().join("qng_cli_test_sweep");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    write(
        &cfg,
        r#"{
            "target": {"family": "fock_pair", "theta": 0.0, "n": 1},
            "kind": "passive",
            "sweep": {"parameter": "theta", "start": 0.0, "stop": 1.5707963267948966, "steps": 5},
            "seed": 1,
            "output": "OUT",
            "format": "json"
        }"#
        .replace("OUT", dir.join("rows.json").to_str().unwrap())
        .as_str(),
    );
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("rows.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);
    // Endpoints are product states: threshold 1.
    assert!((rows[0]["threshold_passive"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((rows[4]["threshold_passive"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(rows[0]["threshold_gaussian"].is_null());
}

#[test]
fn invalid_config_names_offending_key() {
    let dir = std::env::temp_dir().join("qng_cli_test_invalid");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.json");
    write(&cfg, r#"{"target": {"famly": "fock_pair"}}"#);
    let out = bin()
        .args(["threshold", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("famly"), "{msg}");
}

#[test]
fn unknown_verify_suite_exits_one() {
    let out = bin().args(["verify", "not-a-suite"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_sweep_key_is_rejected() {
    let dir = std::env::temp_dir().join("qng_cli_test_nosweep");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    write(
        &cfg,
        r#"{"target": {"family": "fock_pair", "theta": 0.3, "n": 1}}"#,
    );
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("sweep"), "{msg}");
}
