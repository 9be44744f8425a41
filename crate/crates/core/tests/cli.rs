use std::process::{Command, Output};

fn cavgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavgate")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn ideal_verify_reports_exact_table() {
    let o = cavgate(&["ideal-verify", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("8 operations, truth table exact"), "{text}");
    assert!(text.contains("config sha256: "));
}

#[test]
fn timing_default_and_fast() {
    let text = stdout(&cavgate(&["timing", "--n", "3"]));
    assert!(text.contains("τ = 0.467 μs"), "{text}");
    let o = cavgate(&["timing", "--set", "g_over_2pi_mhz=100", "--set", "omega_over_2pi_mhz=150", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let tau = doc["result"]["duration_s"].as_f64().unwrap();
    assert!((tau - 58.40e-9).abs() < 0.01e-9, "{tau}");
    assert_eq!(doc["config"]["g_over_2pi_mhz"], 100.0);
    assert_eq!(doc["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn config_errors_exit_two() {
    let dir = std::env::temp_dir().join(format!("cavgate-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"g_over_2pi_mhz": 10, "gee": 1}"#).unwrap();
    let o = cavgate(&["timing", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gee"));
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(cavgate(&["timing", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let empty = dir.join("empty.json");
    std::fs::write(&empty, "{}").unwrap();
    assert_eq!(stdout(&cavgate(&["timing", "--config", empty.to_str().unwrap()])), stdout(&cavgate(&["timing"])));
    assert_eq!(cavgate(&["timing", "--config", dir.join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    let o = cavgate(&["timing", "--set", "noise.cavity_us=-10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("noise.cavity_us"));
    assert_eq!(cavgate(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn threshold_failure_exits_one() {
    let o = cavgate(&["convergence-check", "--set", "n=2", "--set", "photon_cutoff=1", "--threshold", "0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("F(n_max=2)"));
}

#[test]
fn numerical_abort_exits_three() {
    let o = cavgate(&["simulate", "--set", "n=2", "--set", "integrator.trace_drift_limit=1e-300"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("trace drift"));
}

#[test]
fn sweep_csv_is_reproducible() {
    let args = ["sweep-dt", "--set", "n=2", "--set", "sweep.dt_ns=[-1,0,1]", "--reproducible", "--jobs", "2"];
    let a = cavgate(&args);
    let b = cavgate(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "dt_ns,c,fidelity,runtime_s");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("-1,1,0.9") && rows[1].ends_with(",0"));
    assert!(text.lines().any(|l| l.starts_with("# config_sha256: ")));
    assert!(!text.contains("generated_unix_s"));
    let c = cavgate(&["sweep-dt", "--set", "n=2", "--set", "sweep.dt_ns=[0]"]);
    assert!(stdout(&c).contains("# generated_unix_s: "));
}

#[test]
fn default_sweep_grid_has_eleven_rows() {
    let o = cavgate(&["sweep-dt", "--set", "n=2", "--set", "integrator.step_scale=4", "--reproducible", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["result"]["points"].as_array().unwrap().len(), 11);
}

#[test]
fn simulate_writes_snapshots() {
    let path = std::env::temp_dir().join(format!("cavgate-snap-{}.csv", std::process::id()));
    let o = cavgate(&["simulate", "--set", "n=2", "--dt-ns", "-1", "--snapshots", path.to_str().unwrap(), "--eigen"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("min eigenvalue"));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 1 + 15);
    std::fs::remove_file(path).ok();
}

#[test]
fn atom_variant_and_toffoli_table() {
    let o = cavgate(&["atom-variant"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("104.14 μs"));
    let text = stdout(&cavgate(&["truth-table", "--toffoli"]));
    assert!(text.contains("|110⟩ → +1.000000") && text.contains("|111⟩"), "{text}");
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("cavgate-out-{}.json", std::process::id()));
    let o = cavgate(&["ideal-verify", "--n", "4", "--format", "json", "--out", path.to_str().unwrap(), "--reproducible"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["result"]["operations"], 10);
    assert!(doc.get("generated_unix_s").is_none());
    std::fs::remove_file(path).ok();
}
