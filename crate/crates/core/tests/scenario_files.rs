mod common;

use std::fs;

use common::{load, scenario_path};
use nrslice::error::Error;
use nrslice::model::Policy;
use nrslice::scenario::{load_scenario, load_scenario_with, Overrides};
use nrslice::sim::{InjectionMode, Warmup};

#[test]
fn every_bundled_file_loads() {
    let dir = scenario_path("x").parent().unwrap().to_path_buf();
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 13);
}

#[test]
fn table2_nc3_lam20() {
    let l = load("table2_nc3_lam20");
    let sc = &l.scenario;
    let radio = sc.radio.unwrap();
    assert_eq!(radio.usable_capacity_khz, 22320);
    assert_eq!(radio.block_khz, 360);
    assert_eq!(radio.guard_band_khz, 1340.0);
    let m = &sc.model;
    assert_eq!(m.policy(), Policy::Nc3);
    let khz: Vec<u32> = m
        .dims()
        .iter()
        .map(|d| d.demand_blocks * radio.block_khz)
        .collect();
    assert_eq!(khz, vec![360, 720, 360]);
    assert_eq!(m.classes()[0].max_sessions, 62);
    assert_eq!(m.classes()[1].max_sessions, 31);
    assert!((m.classes()[1].offered_load() - 30.0).abs() < 1e-9);
    assert!((l.time_scale - 1000.0).abs() < 1e-12);
    assert_eq!(sc.replications, 30);
    assert_eq!(sc.horizon_ms, 6000.0);
    let inj = sc.injection.as_ref().unwrap();
    assert_eq!(
        (inj.mode, inj.t_inject_ms, inj.class),
        (InjectionMode::Batch, 2000.0, 0)
    );
}

#[test]
fn literal_file_keeps_reference_rates() {
    let l = load("table2_literal_nc3_lam20");
    let c = &l.scenario.model.classes();
    assert_eq!(c[1].arrival_rate, 0.05);
    assert_eq!(c[0].service_rate, 1.0 / 60.0);
    assert_eq!(l.scenario.warmup, Warmup::StationaryVideoStart);
    assert_eq!(
        l.scenario.injection.as_ref().unwrap().mode,
        InjectionMode::BatchPlusPoisson
    );
}

fn write_variant(edit: impl Fn(String) -> String) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    let text = fs::read_to_string(scenario_path("table2_nc3_lam20")).unwrap();
    fs::write(&path, edit(text)).unwrap();
    (dir, path)
}

#[test]
fn downgraded_demand_must_shrink() {
    let (_d, p) =
        write_variant(|t| t.replace("downgraded_demand_khz = 360", "downgraded_demand_khz = 720"));
    let e = load_scenario(&p).unwrap_err();
    assert!(matches!(e, Error::Validation(_)));
    assert!(
        e.to_string().contains("downgraded demand must be smaller"),
        "{e}"
    );
}

#[test]
fn missing_horizon() {
    let (_d, p) = write_variant(|t| t.replace("horizon_ms = 6000\n", ""));
    let e = load_scenario(&p).unwrap_err();
    assert!(matches!(e, Error::Validation(_)));
    assert!(e.to_string().contains("horizon_ms"), "{e}");
}

#[test]
fn unknown_key_is_a_parse_error_with_location() {
    let (_d, p) = write_variant(|t| t.replace("num_prbs = 31", "num_prbs = 31\nprbs = 2"));
    let e = load_scenario(&p).unwrap_err();
    assert!(matches!(e, Error::Parse { .. }));
    let msg = e.to_string();
    assert!(msg.contains("prbs") && msg.contains("line"), "{msg}");
}

#[test]
fn bad_rate_and_infeasible_radio() {
    let (_d, p) = write_variant(|t| t.replace("\"1/20\"", "\"1/zero\""));
    assert!(matches!(load_scenario(&p), Err(Error::Parse { .. })));
    let (_d, p) = write_variant(|t| t.replace("num_prbs = 31", "num_prbs = 35"));
    assert_eq!(load_scenario(&p).unwrap_err().exit_code(), 2);
    let (_d, p) = write_variant(|t| t.replace("t_inject_ms = 2000", "t_inject_ms = 7000"));
    assert!(matches!(load_scenario(&p), Err(Error::Validation(_))));
}

#[test]
fn hash_is_stable_and_tracks_overrides() {
    let a = load("table2_nc3_lam20");
    let b = load("table2_nc3_lam20");
    assert_eq!(a.hash, b.hash);
    assert_ne!(a.hash, load("table2_nc3_lam40").hash);
    let c = load_scenario_with(
        scenario_path("table2_nc3_lam20"),
        &Overrides {
            replications: Some(5),
            ..Overrides::default()
        },
    )
    .unwrap();
    assert_ne!(a.hash, c.hash);
    assert_eq!(c.scenario.replications, 5);
}
