use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mlctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlctl")).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run_ok(scenario: &str, out: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["run", "--scenario", scenario, "--seed", "3", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = mlctl(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    read_json(&out.join(format!("{scenario}_3.json")))
}

#[test]
fn list_names_every_figure() {
    let o = mlctl(&["list"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["fig2e", "fig4c", "ramsey", "verify-reversal"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn reversal_report_for_five_levels() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_ok("verify-reversal", dir.path(), &["--set", "d=5"]);
    assert_eq!(r["pass"], Value::Bool(true));
    assert!(r["outputs"]["max_dev"].as_f64().unwrap() < 1e-10);
}

#[test]
fn defaults_are_the_reference_parameters() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("rotation-cycle", dir.path(), &[]);
    let c = read_json(&dir.path().join("rotation-cycle_3.config.json"));
    assert_eq!(c["rabi0_hz"], 40000.0);
    assert_eq!(c["detuning0_hz"], 60000.0);
    assert_eq!(c["ramp_time_us"], 200.0);
    assert_eq!(c["chirp_time_us"], 300.0);
}

#[test]
fn invalid_values_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for (set, key) in [("Ω0=-1", "Ω0"), ("nonsense=2", "nonsense"), ("t_δ=100", "t_δ"), ("ramsey_N=6", "ramsey_N")]
    {
        let o = mlctl(&["run", "--scenario", "fig2e", "--set", set, "--out", out]);
        assert!(!o.status.success());
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["error"]["key"], key, "{set}");
    }
    assert!(dir.path().join("fig2e_0.error.json").exists());
    let o = mlctl(&["run", "--scenario", "fig9", "--out", out]);
    assert!(!o.status.success());
}

#[test]
fn hold_time_zero_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_ok("fig2e", dir.path(), &["--set", "t_h=0", "--set", "trajectory_points=50"]);
    assert_eq!(r["outputs"]["duration_us"], 600.0);
}

#[test]
fn saved_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = run_ok("fig4b", first.path(), &["--set", "σ_Z=250", "--set", "n=150", "--set", "ΔΩ_common=-120.5"]);
    let saved = first.path().join("fig4b_3.config.json");
    let b = run_ok("fig4b", second.path(), &["--config", saved.to_str().unwrap()]);
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["table"], b["table"]);
    assert_eq!(a["config"], b["config"]);
}

#[test]
fn csv_matches_report_table() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_ok("fig2e", dir.path(), &["--set", "trajectory_points=40"]);
    let mut reader = csv::Reader::from_path(dir.path().join("fig2e_3.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, ["time_us", "p_-1", "p_0", "p_+1", "p_F1"]);
    let rows = r["table"]["rows"].as_array().unwrap();
    let mut count = 0;
    for (record, row) in reader.records().zip(rows) {
        for (field, value) in record.unwrap().iter().zip(row.as_array().unwrap()) {
            let (x, y) = (field.parse::<f64>().unwrap(), value.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300), "{x} vs {y}");
        }
        count += 1;
    }
    assert_eq!(count, rows.len());
    assert!(r["artifacts"].as_array().unwrap().iter().any(|a| a == "fig2e_3.csv"));
}
