mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::scenario_path;

fn nrslice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrslice"))
        .args(args)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn run_to(dir: &Path, scenario: &str, extra: &[&str]) -> Output {
    let scen = scenario_path(scenario);
    let mut args = vec![
        "--scenario",
        scen.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    nrslice(&args)
}

#[test]
fn simulate_writes_summary_with_aggregate_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_to(
        tmp.path(),
        "table2_nc3_lam20",
        &["--mode", "simulate", "--emit-trajectories"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut r = csv::Reader::from_path(tmp.path().join("summary.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        &header[..10],
        [
            "replication",
            "seed",
            "rho_avg",
            "burst_period_ms",
            "burst_duration_ms",
            "r_rj",
            "r_dw",
            "r_dc",
            "r_v",
            "n_ga"
        ]
    );
    assert_eq!(header.last().unwrap(), "scenario_hash");
    let rows = read_csv(&tmp.path().join("summary.csv"));
    assert_eq!(rows.len(), 32);
    assert_eq!(&rows[30][0], "mean");
    assert_eq!(&rows[31][0], "var");

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("metadata.json")).unwrap())
            .unwrap();
    let hash = meta["scenario_hash"].as_str().unwrap();
    assert_eq!(meta["injection_mode"], "batch");
    assert_eq!(meta["time_scale"], 1000.0);
    assert!(rows.iter().all(|r| r.get(r.len() - 1) == Some(hash)));

    let curves = read_csv(&tmp.path().join("curves.csv"));
    assert_eq!(curves.len(), 601);
    assert!(curves
        .iter()
        .all(|r| r.len() == 9 && r.get(8) == Some(hash)));

    let traj = tmp.path().join("trajectory_r0.csv");
    let mut tr = csv::Reader::from_path(&traj).unwrap();
    let th: Vec<String> = tr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        th,
        [
            "t_ms",
            "m_1",
            "m_2",
            "m_3",
            "occupied_blocks",
            "rho",
            "event_kind",
            "n_downgraded",
            "n_discarded",
            "scenario_hash"
        ]
    );
    assert!(tmp.path().join("trajectory_r29.csv").exists());
}

#[test]
fn analytic_matches_recursion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_to(tmp.path(), "oracle_nc1_two_class", &["--mode", "analytic"]);
    assert!(out.status.success());
    assert!(!tmp.path().join("summary.csv").exists());
    let rows = read_csv(&tmp.path().join("analytic.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let kr: f64 = r[3].parse().unwrap();
        let ctmc: f64 = r[4].parse().unwrap();
        assert!((kr - ctmc).abs() < 1e-8);
        assert!(r[8].is_empty());
    }
}

#[test]
fn both_fills_comparison_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_to(
        tmp.path(),
        "oracle_nc1_two_class",
        &["--mode", "both", "--replications", "4"],
    );
    assert!(out.status.success());
    let rows = read_csv(&tmp.path().join("analytic.csv"));
    for r in &rows {
        let kr: f64 = r[3].parse().unwrap();
        let sim: f64 = r[8].parse().unwrap();
        assert!((kr - sim).abs() < 0.02, "{kr} {sim}");
    }
    assert_eq!(read_csv(&tmp.path().join("summary.csv")).len(), 6);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(run_to(
            d.path(),
            "table2_nc2_lam10",
            &["--seed", "5", "--grid-ms", "20"]
        )
        .status
        .success());
    }
    for f in ["summary.csv", "curves.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(read_csv(&a.path().join("curves.csv")).len(), 301);
    let c = tempfile::tempdir().unwrap();
    assert!(run_to(
        c.path(),
        "table2_nc2_lam10",
        &["--seed", "6", "--grid-ms", "20"]
    )
    .status
    .success());
    assert_ne!(
        fs::read(a.path().join("summary.csv")).unwrap(),
        fs::read(c.path().join("summary.csv")).unwrap()
    );
}

#[test]
fn failures_exit_with_codes_and_records() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    let text = fs::read_to_string(scenario_path("table2_nc3_lam20")).unwrap();
    fs::write(&bad, text.replace("horizon_ms = 6000\n", "")).unwrap();
    let out_dir = tmp.path().join("o1");
    let out = nrslice(&[
        "--scenario",
        bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], "validation");
    assert!(out_dir.join("error.json").exists());

    let capped = tmp.path().join("capped.toml");
    fs::write(&capped, format!("state_limit = 100\n{text}")).unwrap();
    let out_dir = tmp.path().join("o2");
    let out = nrslice(&[
        "--scenario",
        capped.to_str().unwrap(),
        "--mode",
        "analytic",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let rec: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(rec["error"], "state_space_too_large");
}
