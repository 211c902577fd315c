use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    run_in(args, None)
}

fn run_in(args: &[&str], dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_susceptivity"));
    cmd.args(args).env_remove("SUSCEPTIVITY_OUTPUT_DIR");
    if let Some(d) = dir {
        cmd.env("SUSCEPTIVITY_OUTPUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn gamma_json_schema() {
    let out = run(&["gamma", "--transition", "2,1", "--power-cutoff", "0.5", "--dispersion", "linear", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    for key in ["re", "im", "verdict", "route", "error_estimate", "config"] {
        assert!(v.get(key).is_some(), "missing {key}: {v}");
    }
    assert_eq!(v["verdict"], "finite");
    let re = v["re"].as_f64().unwrap();
    let im = v["im"].as_f64().unwrap();
    assert!((re - 4.493_732_158_573_849).abs() < 1e-9 * re);
    // im is minus the principal value
    assert!((im - 3.767_144_625_934_571).abs() < 1e-8 * im);
    assert_eq!(v["config"]["transition"], serde_json::json!([2, 1]));
}

#[test]
fn classify_divergent_exits_two() {
    let out = run(&["classify", "--transition", "2,1", "--power-cutoff", "2.0"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["verdict"], "divergent-endpoint");
    assert_eq!(v["plain"], "divergent-logarithmic");
}

#[test]
fn exit_status_steps_at_three_halves() {
    for t in ["2,1", "3,2"] {
        for nu in ["0", "0.5", "1", "1.25", "1.45", "1.5", "1.75", "2"] {
            let want = if nu.parse::<f64>().unwrap() < 1.5 { 0 } else { 2 };
            let out = run(&["classify", "--transition", t, "--power-cutoff", nu]);
            assert_eq!(out.status.code(), Some(want), "({t}) ν={nu}");
        }
    }
}

#[test]
fn three_one_steps_at_seven_halves() {
    for (nu, want) in [("2", 0), ("3.45", 0), ("3.5", 2)] {
        let out = run(&["classify", "--transition", "3,1", "--power-cutoff", nu]);
        assert_eq!(out.status.code(), Some(want), "ν={nu}");
    }
}

#[test]
fn table_csv_over_nu_grid() {
    let out = run(&["table", "--transitions", "2,1", "3,1", "3,2", "--nu-grid", "0:2:0.25", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,n,nu,omega_mn,re,im,verdict,err,route");
    assert_eq!(lines.len(), 1 + 3 * 9);
    // input order: transition-major, ν ascending
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((first[0], first[1], first[2].parse::<f64>().unwrap()), ("2", "1", 0.0));
    let divergent: Vec<&str> = lines[1 + 7].split(',').collect();
    assert_eq!(divergent[2].parse::<f64>().unwrap(), 1.75);
    assert_eq!(divergent[5], "");
    assert_eq!(divergent[6], "divergent-endpoint");
}

#[test]
fn identical_config_gives_identical_bytes() {
    let args = ["table", "--transitions", "2,1", "3,2", "--nu-grid", "0:1:0.5", "--format", "json"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let oracle = ["oracle-check", "--transition", "2,1", "--power-cutoff", "0.5", "--samples", "20000", "--seed", "7"];
    assert_eq!(run(&oracle).stdout, run(&oracle).stdout);
}

#[test]
fn table_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = run(&["table", "--transitions", "2,1", "--nu-grid", "1.5:2:0.5", "--format", "json", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Value = serde_json::from_str(&text).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["im"].is_null() && r["verdict"] == "divergent-endpoint"));
    assert!(dir.path().join("t.json.meta.json").exists());
}

#[test]
fn relative_output_goes_to_output_dir_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        &["gamma", "--transition", "3,2", "--power-cutoff", "1", "--format", "csv", "--output", "g.csv"],
        Some(dir.path()),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["transition"], serde_json::json!([3, 2]));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# run\ntransition = 3,1\npower-cutoff = 0\nformat = json\n").unwrap();
    let out = run(&["gamma", "--config", cfg.to_str().unwrap(), "--power-cutoff", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["config"]["transition"], serde_json::json!([3, 1]));
    assert_eq!(v["config"]["cutoff"]["power"]["nu"].as_f64(), Some(0.5));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["gamma", "--bogus"],
        vec!["gamma", "--transition", "1,2", "--power-cutoff", "0.5"],
        vec!["gamma", "--transition", "2,1", "--power-cutoff", "-1"],
        vec!["frobnicate"],
        vec!["table", "--transitions", "2,1", "--nu-grid", "1:0:0.5"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_one() {
    let out = run(&["gamma", "--transition", "2,1", "--power-cutoff", "0.5", "--output", "/nonexistent-dir/x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn demo_and_oracle_check_succeed() {
    let out = run(&["demo", "--demo", "second-order"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["oracle-check", "--transition", "2,1", "--power-cutoff", "0.5", "--samples", "100000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["agree"], true);
    let out = run(&["oracle-check", "--transition", "2,1", "--power-cutoff", "2", "--samples", "100000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn atomic_overrides_are_echoed() {
    let out = run(&["gamma", "--transition", "2,1", "--power-cutoff", "0.5", "--a0", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());
    assert_eq!(json(&out)["config"]["a0"].as_f64(), Some(2.0));
}
