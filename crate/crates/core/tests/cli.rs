use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn klm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_klm-teleport"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn single_uniform_success() {
    let v = json_stdout(&klm(&["single", "--max-entangled", "4"]));
    let p = v["success_probability"].as_f64().unwrap();
    assert!((p - 0.8).abs() < 1e-12);
    assert_eq!(v["outcomes"].as_array().unwrap().len(), 6);
}

#[test]
fn single_explicit_qubit_reports_post_states() {
    let v = json_stdout(&klm(&[
        "single", "--tent", "0.0366", "--alpha", "0.6,0", "--beta", "0,0.8",
    ]));
    assert!(v["outcomes"][3]["post_state"].is_object());
    assert!(v["outcomes"][0].get("post_state").is_none());
}

#[test]
fn chain_headline_values() {
    let v = json_stdout(&klm(&["chain", "--tent", "0.0366", "--hops", "6"]));
    assert!((v["p_deferred"].as_f64().unwrap() - 0.415265).abs() < 1e-6);
    assert!((v["p_per_hop"].as_f64().unwrap() - 0.251325).abs() < 1e-6);
}

#[test]
fn chain_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    let out = klm(&[
        "chain",
        "--max-entangled",
        "2",
        "--hops",
        "2",
        "--table",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m_1,m_2,joint_success_prob"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn chain_over_budget_needs_monte_carlo() {
    let out = klm(&["chain", "--tent", "0", "--hops", "8", "--budget", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json_stdout(&klm(&[
        "chain",
        "--tent",
        "0",
        "--hops",
        "8",
        "--budget",
        "1000",
        "--monte-carlo",
        "20000",
        "--seed",
        "3",
    ]));
    assert!(v["p_deferred"].is_null());
    assert_eq!(v["monte_carlo"]["trials"], 20000);
}

#[test]
fn sweep_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = klm(&[
        "sweep",
        "--steps",
        "10",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((summary["argmax_x"].as_f64().unwrap() - 0.0366).abs() < 5e-4);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,p\n"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn optimize_saves_loadable_coeffs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.json");
    let v = json_stdout(&klm(&[
        "optimize",
        "--n",
        "2",
        "--hops",
        "1",
        "--save",
        path.to_str().unwrap(),
    ]));
    assert!((v["p"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
    let reloaded = json_stdout(&klm(&["single", "--coeffs", path.to_str().unwrap()]));
    assert!((reloaded["success_probability"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn unnormalized_coefficient_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"n_photons": 1, "coeffs": [[1.0, 0.0], [1.0, 0.0]]}"#,
    )
    .unwrap();
    let out = klm(&["single", "--coeffs", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn certify_pass_and_injected_fault() {
    let ok = klm(&["certify", "--n", "2", "--cases", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = klm(&["certify", "--n", "2", "--cases", "5", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn certify_rejects_mismatched_n() {
    let out = klm(&["certify", "--n", "3", "--max-entangled", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "tent = 0.0366\nhops = 2\n").unwrap();
    let cfg = path.to_str().unwrap();
    let v = json_stdout(&klm(&["chain", "--config", cfg]));
    assert_eq!(v["hops"], 2);
    assert_eq!(v["n_photons"], 6);
    let v = json_stdout(&klm(&[
        "chain",
        "--config",
        cfg,
        "--max-entangled",
        "3",
        "--hops",
        "1",
    ]));
    assert_eq!(v["hops"], 1);
    assert_eq!(v["n_photons"], 3);
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_klm-teleport"))
        .args(["chain", "--tent", "0.0366", "--hops", "4"])
        .env("KLM_TELEPORT_THREADS", "1")
        .output()
        .unwrap();
    let v = json_stdout(&out);
    let single = klm(&["chain", "--tent", "0.0366", "--hops", "4"]);
    assert_eq!(v, json_stdout(&single));
}
