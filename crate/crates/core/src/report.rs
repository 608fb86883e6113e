//! Runs a loaded scenario and writes its output bundle:
//!
//! * `metadata.json`: scenario hash, seed, version, timestamp, run settings
//! * `summary.csv`: one row per replication, then `mean` and `var` rows
//! * `curves.csv`: cross-replication mean and variance of `M_i(t)` and mean
//!   utilization on the reporting grid
//! * `trajectory_r{n}.csv`: every event of replication `n` (optional)
//! * `analytic.csv`, `occupancy.csv`: steady-state results per class and per
//!   occupancy level
//!
//! Every CSV row ends with the scenario hash. CSV bodies depend only on the
//! scenario and seed.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::analytic::{
    blocking_probabilities, build_generator, kaufman_roberts, mean_counts, occupancy_distribution,
    steady_state, KaufmanRoberts,
};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate, class_arrivals, summarize, ExperimentSummary, ReplicationSummary, Stat,
};
use crate::model::{LossModel, Policy};
use crate::scenario::LoadedScenario;
use crate::sim::{run_experiment_with, Execution, TrajectoryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Analytic,
    Both,
}

impl Mode {
    fn simulates(self) -> bool {
        self != Mode::Analytic
    }

    fn solves(self) -> bool {
        self != Mode::Simulate
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "analytic" => Ok(Mode::Analytic),
            "both" => Ok(Mode::Both),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode {s}; expected simulate, analytic or both"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Analytic => "analytic",
            Mode::Both => "both",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub emit_trajectories: bool,
    pub execution: Execution,
}

impl RunOptions {
    pub fn new(mode: Mode, out_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            mode,
            out_dir: out_dir.into(),
            emit_trajectories: false,
            execution: Execution::Parallel,
        }
    }
}

/// Steady-state results of the scenario's model with every class arriving
/// at its configured rate.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    pub states: usize,
    /// Per class, only for complete sharing with non-binding caps.
    pub kaufman_roberts: Option<KaufmanRoberts>,
    pub blocking: Vec<f64>,
    pub mean_sessions: Vec<f64>,
    pub occupancy: Vec<f64>,
    pub utilization: f64,
}

pub fn analyze(model: &LossModel, state_limit: usize) -> Result<AnalyticReport> {
    let (space, q) = build_generator(model, state_limit)?;
    let pi = steady_state(&q)?;
    let occupancy = occupancy_distribution(model, &space, &pi);
    let utilization = occupancy
        .iter()
        .enumerate()
        .map(|(c, p)| c as f64 * p)
        .sum::<f64>()
        / f64::from(model.capacity());
    let kr = if model.policy() == Policy::Nc1 {
        kaufman_roberts(model.classes(), model.capacity()).ok()
    } else {
        None
    };
    Ok(AnalyticReport {
        states: space.len(),
        kaufman_roberts: kr,
        blocking: blocking_probabilities(model, &space, &pi),
        mean_sessions: mean_counts(&space, &pi),
        occupancy,
        utilization,
    })
}

#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub replications: Vec<ReplicationSummary>,
    pub summary: Option<ExperimentSummary>,
    pub analytic: Option<AnalyticReport>,
}

/// Runs the scenario in the requested mode and writes the bundle into
/// `options.out_dir`, creating it if needed.
pub fn run(loaded: &LoadedScenario, options: &RunOptions) -> Result<OutputBundle> {
    let scenario = &loaded.scenario;
    let model = &scenario.model;
    let dir = options.out_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();

    let analytic = if options.mode.solves() {
        Some(analyze(model, loaded.state_limit)?)
    } else {
        None
    };

    let mut replications = Vec::new();
    let mut summary = None;
    let mut sim_blocking = None;
    if options.mode.simulates() {
        let trajectories = run_experiment_with(scenario, options.execution)?;
        replications = trajectories
            .iter()
            .map(|t| summarize(t, scenario, &loaded.metrics))
            .collect();
        let agg = aggregate(&replications)?;
        files.push(write_summary(&dir, &loaded.hash, &replications, &agg)?);
        files.push(write_curves(&dir, &loaded.hash, &agg)?);
        if options.emit_trajectories {
            for t in &trajectories {
                files.push(write_trajectory(&dir, &loaded.hash, model, t)?);
            }
        }
        sim_blocking = Some(simulated_blocking(&trajectories, model.classes().len()));
        summary = Some(agg);
    }

    if let Some(a) = &analytic {
        files.push(write_analytic(
            &dir,
            &loaded.hash,
            model,
            a,
            sim_blocking.as_deref(),
        )?);
        files.push(write_occupancy(&dir, &loaded.hash, a)?);
    }

    let meta = dir.join("metadata.json");
    let injection = scenario.injection.as_ref();
    let radio = scenario.radio.as_ref();
    let metadata = json!({
        "label": scenario.label,
        "description": loaded.file.description,
        "figure": loaded.file.figure,
        "scenario_hash": loaded.hash,
        "base_seed": scenario.base_seed,
        "replications": scenario.replications,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": chrono::Utc::now().to_rfc3339(),
        "mode": options.mode,
        "policy": model.policy(),
        "capacity_blocks": model.capacity(),
        "block_khz": radio.map(|r| r.block_khz),
        "usable_capacity_khz": radio.map(|r| r.usable_capacity_khz),
        "guard_band_khz": radio.map(|r| r.guard_band_khz),
        "time_scale": loaded.time_scale,
        "horizon_ms": scenario.horizon_ms,
        "warmup": scenario.warmup,
        "sampling": scenario.sampling,
        "injection_mode": injection.map(|i| i.mode),
        "t_inject_ms": injection.map(|i| i.t_inject_ms),
        "batch_size": injection.map(|i| i.batch_size),
        "grid_ms": loaded.metrics.grid_ms,
        "rv_window": if loaded.metrics.rv_whole_window { "whole" } else { "burst_free" },
        "files": files.iter().filter_map(|f| f.file_name()).map(|f| f.to_string_lossy()).collect::<Vec<_>>(),
    });
    fs::write(&meta, serde_json::to_string_pretty(&metadata)? + "\n")?;
    files.push(meta);

    Ok(OutputBundle {
        dir,
        files,
        replications,
        summary,
        analytic,
    })
}

/// Pooled `(arrivals, rejected)` of stream arrivals per class.
fn simulated_blocking(trajectories: &[TrajectoryRecord], classes: usize) -> Vec<(u64, u64)> {
    let mut total = vec![(0, 0); classes];
    for t in trajectories {
        for (acc, (a, r)) in total.iter_mut().zip(class_arrivals(t, classes, true)) {
            acc.0 += a;
            acc.1 += r;
        }
    }
    total
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

pub const SUMMARY_COLUMNS: [&str; 18] = [
    "replication",
    "seed",
    "rho_avg",
    "burst_period_ms",
    "burst_duration_ms",
    "r_rj",
    "r_dw",
    "r_dc",
    "r_v",
    "n_ga",
    "r_rj_post_injection",
    "n_ga_post_injection",
    "n_rejected",
    "n_downgraded",
    "n_discarded",
    "goose_arrivals",
    "goose_rejected",
    "scenario_hash",
];

fn write_summary(
    dir: &Path,
    hash: &str,
    reps: &[ReplicationSummary],
    agg: &ExperimentSummary,
) -> Result<PathBuf> {
    let path = dir.join("summary.csv");
    let mut w = writer(&path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for s in reps {
        let c = &s.counts;
        w.write_record([
            s.replication.to_string(),
            s.seed.to_string(),
            num(s.rho_avg),
            opt(s.burst_period_ms),
            opt(s.burst_duration_ms),
            opt(s.r_rj),
            opt(s.r_dw),
            opt(s.r_dc),
            opt(s.r_v),
            c.video_arrivals.to_string(),
            opt(s.r_rj_post_injection),
            c.video_arrivals_post_injection.to_string(),
            c.video_rejected.to_string(),
            c.video_downgraded.to_string(),
            c.video_discarded.to_string(),
            c.burst_attempts.to_string(),
            c.burst_rejected.to_string(),
            hash.to_string(),
        ])?;
    }
    let stats = [
        agg.rho_avg,
        agg.burst_period_ms,
        agg.burst_duration_ms,
        agg.r_rj,
        agg.r_dw,
        agg.r_dc,
        agg.r_v,
        agg.n_ga,
        agg.r_rj_post_injection,
    ];
    let counts: [&dyn Fn(&ReplicationSummary) -> u64; 6] = [
        &|s| s.counts.video_arrivals_post_injection,
        &|s| s.counts.video_rejected,
        &|s| s.counts.video_downgraded,
        &|s| s.counts.video_discarded,
        &|s| s.counts.burst_attempts,
        &|s| s.counts.burst_rejected,
    ];
    let count_stats: Vec<Option<Stat>> = counts
        .iter()
        .map(|f| Stat::from_values(&reps.iter().map(|s| f(s) as f64).collect::<Vec<_>>()))
        .collect();
    for (label, pick) in [
        ("mean", (|s: &Stat| s.mean) as fn(&Stat) -> f64),
        ("var", |s: &Stat| s.variance),
    ] {
        let f = |s: &Option<Stat>| opt(s.as_ref().map(pick));
        let mut row = vec![label.to_string(), String::new()];
        row.extend(stats.iter().map(f));
        row.extend(count_stats.iter().map(f));
        row.push(hash.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_curves(dir: &Path, hash: &str, agg: &ExperimentSummary) -> Result<PathBuf> {
    let path = dir.join("curves.csv");
    let mut w = writer(&path)?;
    let c = &agg.curves;
    let dims = c.mean_m.len();
    let mut header = vec!["t_ms".to_string()];
    header.extend((1..=dims).map(|i| format!("mean_m_{i}")));
    header.extend((1..=dims).map(|i| format!("var_m_{i}")));
    header.push("mean_rho".into());
    header.push("scenario_hash".into());
    w.write_record(&header)?;
    for (k, t) in c.t_ms.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(c.mean_m.iter().map(|m| num(m[k])));
        row.extend(c.var_m.iter().map(|m| num(m[k])));
        row.push(num(c.mean_rho[k]));
        row.push(hash.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_trajectory(
    dir: &Path,
    hash: &str,
    model: &LossModel,
    t: &TrajectoryRecord,
) -> Result<PathBuf> {
    let path = dir.join(format!("trajectory_r{}.csv", t.replication));
    let mut w = writer(&path)?;
    let dims = model.num_dims();
    let mut header = vec!["t_ms".to_string()];
    header.extend((1..=dims).map(|i| format!("m_{i}")));
    for h in [
        "occupied_blocks",
        "rho",
        "event_kind",
        "n_downgraded",
        "n_discarded",
        "scenario_hash",
    ] {
        header.push(h.into());
    }
    w.write_record(&header)?;
    let cap = f64::from(model.capacity());
    let mut row = |time: f64, state: &[u32], kind: &str, dg: u32, dc: u32| {
        let occ = model.occupied(state);
        let mut r = vec![num(time)];
        r.extend(state.iter().map(u32::to_string));
        r.push(occ.to_string());
        r.push(num(f64::from(occ) / cap));
        r.push(kind.to_string());
        r.push(dg.to_string());
        r.push(dc.to_string());
        r.push(hash.to_string());
        w.write_record(&r)
    };
    row(0.0, &t.initial, "initial", 0, 0)?;
    for e in &t.events {
        row(e.t_ms, &e.state, e.kind.as_str(), e.downgraded, e.discarded)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_analytic(
    dir: &Path,
    hash: &str,
    model: &LossModel,
    a: &AnalyticReport,
    sim: Option<&[(u64, u64)]>,
) -> Result<PathBuf> {
    let path = dir.join("analytic.csv");
    let mut w = writer(&path)?;
    w.write_record([
        "class",
        "name",
        "offered_load",
        "kr_blocking",
        "ctmc_blocking",
        "ctmc_mean_sessions",
        "sim_arrivals",
        "sim_rejected",
        "sim_blocking",
        "states",
        "ctmc_utilization",
        "scenario_hash",
    ])?;
    for (i, c) in model.classes().iter().enumerate() {
        let sessions: f64 = model
            .dims()
            .iter()
            .zip(&a.mean_sessions)
            .filter(|(d, _)| d.class == i)
            .map(|(_, m)| m)
            .sum();
        let (arr, rej) = match sim {
            Some(s) => (s[i].0.to_string(), s[i].1.to_string()),
            None => (String::new(), String::new()),
        };
        let sim_b = sim
            .filter(|s| s[i].0 > 0)
            .map(|s| num(s[i].1 as f64 / s[i].0 as f64))
            .unwrap_or_default();
        w.write_record([
            (i + 1).to_string(),
            c.name.clone(),
            num(c.offered_load()),
            opt(a.kaufman_roberts.as_ref().map(|k| k.blocking[i])),
            num(a.blocking[i]),
            num(sessions),
            arr,
            rej,
            sim_b,
            a.states.to_string(),
            num(a.utilization),
            hash.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

fn write_occupancy(dir: &Path, hash: &str, a: &AnalyticReport) -> Result<PathBuf> {
    let path = dir.join("occupancy.csv");
    let mut w = writer(&path)?;
    w.write_record(["occupied_blocks", "kr_q", "ctmc_q", "scenario_hash"])?;
    for (c, p) in a.occupancy.iter().enumerate() {
        w.write_record([
            c.to_string(),
            opt(a.kaufman_roberts.as_ref().map(|k| k.occupancy.q[c])),
            num(*p),
            hash.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes() {
        assert_eq!("both".parse::<Mode>().unwrap(), Mode::Both);
        assert!("all".parse::<Mode>().is_err());
        assert_eq!(Mode::Analytic.to_string(), "analytic");
    }
}
