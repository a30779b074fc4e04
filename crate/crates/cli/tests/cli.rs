use std::path::Path;
use std::process::{Command, Output};

use dicke_ising_cli::output::{read_csv, read_json, CSV_SCHEMA_LINE};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke-ising"))
        .args(args)
        .env_remove("DICKE_ISING_THREADS")
        .output()
        .expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_argv_lists_commands_with_usage_exit() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    for c in ["phase-diagram", "response-map", "finite-size-scan", "validate"] {
        assert!(text.contains(c), "{c} missing from usage");
    }
}

#[test]
fn unknown_flag_and_bad_grid_are_usage_errors() {
    assert_eq!(run(&["phase-diagram", "--colour", "1"]).status.code(), Some(2));
    assert_eq!(run(&["phase-diagram", "--omega-x-grid", "0:1"]).status.code(), Some(2));
    assert_eq!(run(&["bound-states", "--n-k", "3"]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[params]\nlambda = 0.2\nlamda = 0.3\n").unwrap();
    let out = run(&["bound-states", "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("lamda") && text.contains("line 3"), "{text}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[params]\nlambda = 0.1\nomega_x = 1.2\nn_k = 512\n").unwrap();
    let out_path = dir.path().join("bs.json");
    let out = run(&[
        "bound-states",
        "--config",
        path_arg(&cfg),
        "--lambda",
        "0.3",
        "--format",
        "json",
        "-o",
        path_arg(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&out_path).unwrap();
    assert_eq!(v["meta"]["params"]["lambda"], 0.3);
    assert_eq!(v["meta"]["params"]["omega_x"], 1.2);
    assert_eq!(v["meta"]["params"]["n_k"], 512);
    assert!(v["data"]["bound_states"].is_array());
}

#[test]
fn phase_diagram_csv_boundary_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("pd.csv");
    let args = [
        "phase-diagram",
        "--n-k",
        "256",
        "--lambda-sq-grid",
        "0:0.4:5",
        "--omega-x-grid",
        "0:0.8:3",
        "-o",
        path_arg(&out_path),
    ];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_csv(&out_path).unwrap();
    assert_eq!(&t.header[..6], ["lambda_sq_over_omega", "omega_x", "m_x", "m_z", "n_ph", "e0"]);
    assert_eq!(t.rows.len(), 15);
    let b = read_csv(&dir.path().join("pd.boundary.csv")).unwrap();
    assert_eq!(b.header, ["lambda_sq_over_omega", "omega_x", "order", "jump"]);
    assert!(!b.rows.is_empty());

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pd.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["schema"], "dicke-ising/1");
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(meta["config"]["grids"]["omega_x"]["count"], 3);

    // Identical configuration gives byte-identical data.
    let first = std::fs::read(&out_path).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(std::fs::read(&out_path).unwrap(), first);
    assert!(String::from_utf8_lossy(&first).starts_with(CSV_SCHEMA_LINE));
}

#[test]
fn response_map_matrix_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("map.csv");
    let out = run(&[
        "response-map",
        "--n-k",
        "512",
        "--broadening",
        "0.01",
        "--lambda-grid",
        "0:0.2:3",
        "--omega-grid",
        "0:2:101",
        "-o",
        path_arg(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_csv(&out_path).unwrap();
    assert_eq!(t.header.len(), 4);
    assert_eq!(t.header[0], "omega");
    assert_eq!(t.rows.len(), 101);
    // Bare cavity column peaks at Omega.
    let col: Vec<f64> = t.rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let imax = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
    assert_eq!(t.rows[imax][0].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn bound_states_at_high_field_find_the_lower_root() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bs.csv");
    let out = run(&[
        "bound-states",
        "--omega-x",
        "1.2",
        "--four-j-over-omega",
        "1",
        "--lambda",
        "0.2",
        "-o",
        path_arg(&out_path),
    ]);
    assert!(out.status.success());
    let t = read_csv(&out_path).unwrap();
    assert_eq!(t.header, ["omega_b", "side", "residue_proxy", "gap_to_edge"]);
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0][1], "below-band");
}

#[test]
fn impurity_profile_is_odd() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("imp.csv");
    let out = run(&["impurity-profile", "--omega-x", "0.3", "--sites", "32", "--bare", "-o", path_arg(&out_path)]);
    assert!(out.status.success());
    let t = read_csv(&out_path).unwrap();
    assert_eq!(t.rows.len(), 33);
    let v: Vec<f64> = t.rows.iter().map(|r| r[1].parse().unwrap()).collect();
    for i in 0..v.len() {
        assert!((v[i] + v[v.len() - 1 - i]).abs() < 1e-14);
    }
}

#[test]
fn ed_spectrum_and_scan() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("ed.csv");
    let out = run(&[
        "ed-spectrum",
        "--n-spins",
        "3",
        "--n-max",
        "6",
        "--lambda",
        "0.2",
        "--omega-grid",
        "0:2:51",
        "-o",
        path_arg(&spec),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_csv(&spec).unwrap().rows.len(), 51);
    let poles = read_csv(&dir.path().join("ed.poles.csv")).unwrap();
    assert_eq!(poles.header, ["omega", "weight"]);

    let scan = dir.path().join("scan.json");
    let out = run(&[
        "finite-size-scan",
        "--sizes",
        "2,4",
        "--n-max",
        "8",
        "--lambda-grid",
        "0.1:0.2:2",
        "--omega-grid",
        "0:2:21",
        "--format",
        "json",
        "-o",
        path_arg(&scan),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&scan).unwrap();
    assert_eq!(v["data"]["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn dimension_budget_violation_is_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "ed-spectrum",
        "--n-spins",
        "6",
        "--dimension-budget",
        "100",
        "-o",
        path_arg(&dir.path().join("ed.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn validate_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("validate.csv");
    let out = run(&["validate", "--threads", "1", "-o", path_arg(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS") && !stdout.contains("FAIL"));
    let t = read_csv(&report).unwrap();
    assert!(t.rows.iter().all(|r| r[3] == "true"));
}
