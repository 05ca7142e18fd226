use std::path::Path;
use std::process::Command;

use cubeshadow_exp::{parse, ExperimentConfig, Format};

fn shadow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_shadow")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": "scaling_cUn", "n_list": [3, 2], "samples_per_n": 2, "seed": 5,
            "optimizer": {"restarts": 4}}"#,
    );
    let out = dir.path().join("records.csv");
    let o = shadow(&["scaling_cUn", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary["fit"]["exponent"].is_number());
    let text = std::fs::read(&out).unwrap();
    let records = parse(&text[..], Format::Csv).unwrap();
    assert_eq!(records.len(), 2 * 2 * 5);
    assert_eq!(records[0].n, 2);

    // Records to stdout as JSON lines; the summary moves to stderr.
    let o = shadow(&["scaling_cUn", "--config", &cfg, "--format", "json", "--seed", "6"]);
    assert!(o.status.success());
    let json = parse(&o.stdout[..], Format::Json).unwrap();
    assert_eq!(json.len(), records.len());
    assert_ne!(json[0].seed_used, records[0].seed_used);
    assert!(serde_json::from_slice::<serde_json::Value>(&o.stderr).is_ok());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(
        dir.path(),
        "ok.json",
        r#"{"experiment": "rare_event", "n_list": [2], "samples_per_n": 1, "seed": 1}"#,
    );
    let big = write_config(
        dir.path(),
        "big.json",
        r#"{"experiment": "rare_event", "n_list": [5000], "samples_per_n": 1, "seed": 1}"#,
    );
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"experiment": "rare_event", "n_list": [], "samples_per_n": 1, "seed": 1}"#,
    );
    assert_eq!(shadow(&["rare_event", "--config", &big]).status.code(), Some(3));
    assert_eq!(shadow(&["rare_event", "--config", &bad]).status.code(), Some(1));
    assert_eq!(shadow(&["scaling_cUn", "--config", &ok]).status.code(), Some(1));
    assert_eq!(shadow(&["rare_event", "--config", &ok, "--format", "xml"]).status.code(), Some(1));
    assert_eq!(shadow(&["rare_event", "--config", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(shadow(&["rare_event", "--config", &ok]).status.code(), Some(0));
}

#[test]
fn config_file_round_trips_field_for_field() {
    let text = r#"{"experiment": "nets_audit", "n_list": [4], "samples_per_n": 10, "seed": 3,
        "optimizer": {"restarts": 2, "max_iters": 50, "step_init": 0.2, "step_shrink": 0.25, "grad_tol": 1e-6},
        "output_path": "x.csv", "format": "json"}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg.optimizer.max_iters, 50);
    assert_eq!(cfg.format, Format::Json);
    let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(again, cfg);
}
