//! Per-replication performance metrics and their aggregation across
//! replications.
//!
//! The burst class is the injected class (or, without an injection, the
//! high-priority class); every other class counts as "video" for the ratio
//! metrics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{LossModel, TransitionKind};
use crate::sim::{Origin, Scenario, TrajectoryRecord};

pub const DEFAULT_GRID_MS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub grid_ms: f64,
    /// Compute `r_v` over the whole window instead of only while no burst
    /// session is present.
    pub rv_whole_window: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            grid_ms: DEFAULT_GRID_MS,
            rv_whole_window: false,
        }
    }
}

/// Which dimensions hold burst sessions and which classes are observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Roles {
    pub burst_class: Option<usize>,
    pub burst_dims: Vec<usize>,
    pub video_classes: Vec<usize>,
}

impl Roles {
    pub fn of(scenario: &Scenario) -> Self {
        let model = &scenario.model;
        let burst_class = scenario
            .injected_class()
            .or_else(|| model.high_priority_class());
        Self::with_burst_class(model, burst_class)
    }

    pub fn with_burst_class(model: &LossModel, burst_class: Option<usize>) -> Self {
        let burst_dims = model
            .dims()
            .iter()
            .enumerate()
            .filter(|(_, d)| Some(d.class) == burst_class)
            .map(|(i, _)| i)
            .collect();
        let video_classes = (0..model.classes().len())
            .filter(|&c| Some(c) != burst_class)
            .collect();
        Roles {
            burst_class,
            burst_dims,
            video_classes,
        }
    }

    fn burst_count(&self, state: &[u32]) -> u32 {
        self.burst_dims.iter().map(|&d| state[d]).sum()
    }

    fn is_video(&self, class: usize) -> bool {
        self.video_classes.contains(&class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    /// Video arrivals over the observation window (`n_ga`).
    pub video_arrivals: u64,
    pub video_accepted_full: u64,
    pub video_admitted_downgraded: u64,
    pub video_rejected: u64,
    /// Video sessions downgraded: cascade downgrades plus downgraded
    /// admissions.
    pub video_downgraded: u64,
    pub video_discarded: u64,
    /// Video arrivals while no burst session was present.
    pub video_arrivals_burst_free: u64,
    pub video_rejected_burst_free: u64,
    /// Video arrivals at or after the injection instant.
    pub video_arrivals_post_injection: u64,
    pub video_rejected_post_injection: u64,
    /// Admission attempts of the burst class, retries included.
    pub burst_attempts: u64,
    pub burst_rejected: u64,
    pub burst_admitted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub replication: u32,
    pub seed: u64,
    pub window_ms: f64,
    pub rho_avg: f64,
    pub grid_ms: f64,
    /// Utilization at `k * grid_ms`.
    pub rho_t: Vec<f64>,
    /// Session counts per dimension at `k * grid_ms`, indexed `[dim][k]`.
    pub m_t: Vec<Vec<u32>>,
    /// Time from injection until the last burst session leaves.
    pub burst_period_ms: Option<f64>,
    /// Time from the first burst admission until the last burst departure.
    pub burst_duration_ms: Option<f64>,
    pub r_rj: Option<f64>,
    pub r_dw: Option<f64>,
    pub r_dc: Option<f64>,
    pub r_v: Option<f64>,
    /// Rejected video fraction among arrivals at or after injection.
    pub r_rj_post_injection: Option<f64>,
    pub counts: Counts,
}

impl ReplicationSummary {
    pub fn n_ga(&self) -> u64 {
        self.counts.video_arrivals
    }
}

/// Grid points `0, g, 2g, ...` up to the horizon.
pub fn grid_points(horizon_ms: f64, grid_ms: f64) -> Vec<f64> {
    let n = (horizon_ms / grid_ms + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * grid_ms).collect()
}

/// Utilization on the grid and its exact time average over the window.
pub fn utilization(
    trajectory: &TrajectoryRecord,
    model: &LossModel,
    grid: &[f64],
) -> (Vec<f64>, f64) {
    let cap = f64::from(model.capacity());
    let rho_t = grid
        .iter()
        .map(|&t| f64::from(model.occupied(trajectory.state_at(t.min(trajectory.end_ms)))) / cap)
        .collect();
    let window = trajectory.end_ms;
    let area: f64 = trajectory
        .segments()
        .map(|(s, e, st)| (e - s) * f64::from(model.occupied(st)))
        .sum();
    let rho_avg = if window > 0.0 {
        area / (cap * window)
    } else {
        0.0
    };
    (rho_t, rho_avg)
}

/// `integral M_i(t) dt` over the window, per dimension, in session-ms.
pub fn session_integrals(trajectory: &TrajectoryRecord) -> Vec<f64> {
    let mut out = vec![0.0; trajectory.initial.len()];
    for (s, e, st) in trajectory.segments() {
        for (o, &n) in out.iter_mut().zip(st.iter()) {
            *o += (e - s) * f64::from(n);
        }
    }
    out
}

/// Burst period (from injection) and burst duration (from the first burst
/// admission) ending at the last instant a burst session is present. Both
/// absent if no burst session was ever in the system.
pub fn burst_period(trajectory: &TrajectoryRecord, roles: &Roles) -> (Option<f64>, Option<f64>) {
    let mut first = None;
    let mut last = None;
    for (s, e, st) in trajectory.segments() {
        if roles.burst_count(st) > 0 {
            first.get_or_insert(s);
            last = Some(e);
        }
    }
    let period = match (last, trajectory.t_inject_ms) {
        (Some(l), Some(ti)) => Some(l - ti),
        _ => None,
    };
    let duration = first.zip(last).map(|(f, l)| l - f);
    (period, duration)
}

/// Event bookkeeping for the ratio metrics.
pub fn counts(trajectory: &TrajectoryRecord, roles: &Roles) -> Counts {
    let mut c = Counts::default();
    let t_inject = trajectory.t_inject_ms.unwrap_or(f64::INFINITY);
    let mut before = &trajectory.initial;
    for e in &trajectory.events {
        c.video_downgraded += u64::from(e.downgraded);
        c.video_discarded += u64::from(e.discarded);
        if e.origin != Origin::Departure {
            let rejected = e.kind == TransitionKind::ArrivalRejected;
            if roles.is_video(e.class) {
                c.video_arrivals += 1;
                match e.kind {
                    TransitionKind::ArrivalRejected => c.video_rejected += 1,
                    TransitionKind::ArrivalDowngraded => c.video_admitted_downgraded += 1,
                    _ => c.video_accepted_full += 1,
                }
                if roles.burst_count(before) == 0 {
                    c.video_arrivals_burst_free += 1;
                    c.video_rejected_burst_free += u64::from(rejected);
                }
                if e.t_ms >= t_inject {
                    c.video_arrivals_post_injection += 1;
                    c.video_rejected_post_injection += u64::from(rejected);
                }
            } else if Some(e.class) == roles.burst_class {
                c.burst_attempts += 1;
                if rejected {
                    c.burst_rejected += 1;
                } else {
                    c.burst_admitted += 1;
                }
            }
        }
        before = &e.state;
    }
    c
}

/// `(arrivals, rejected)` per class. Arrivals include batch sessions and
/// retries unless `stream_only`.
pub fn class_arrivals(
    trajectory: &TrajectoryRecord,
    classes: usize,
    stream_only: bool,
) -> Vec<(u64, u64)> {
    let mut out = vec![(0, 0); classes];
    for e in &trajectory.events {
        if e.origin == Origin::Departure || (stream_only && e.origin != Origin::Stream) {
            continue;
        }
        out[e.class].0 += 1;
        out[e.class].1 += u64::from(e.kind == TransitionKind::ArrivalRejected);
    }
    out
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn summarize(
    trajectory: &TrajectoryRecord,
    scenario: &Scenario,
    config: &MetricsConfig,
) -> ReplicationSummary {
    let roles = Roles::of(scenario);
    let model = &scenario.model;
    let grid = grid_points(scenario.horizon_ms, config.grid_ms);
    let (rho_t, rho_avg) = utilization(trajectory, model, &grid);
    let m_t = (0..model.num_dims())
        .map(|d| {
            grid.iter()
                .map(|&t| trajectory.state_at(t.min(trajectory.end_ms))[d])
                .collect()
        })
        .collect();
    let (burst_period_ms, burst_duration_ms) = burst_period(trajectory, &roles);
    let c = counts(trajectory, &roles);
    let n = c.video_arrivals;
    let r_v = if config.rv_whole_window {
        ratio(c.video_rejected, n)
    } else {
        ratio(c.video_rejected_burst_free, c.video_arrivals_burst_free)
    };
    ReplicationSummary {
        replication: trajectory.replication,
        seed: trajectory.seed,
        window_ms: trajectory.end_ms,
        rho_avg,
        grid_ms: config.grid_ms,
        rho_t,
        m_t,
        burst_period_ms,
        burst_duration_ms,
        r_rj: ratio(c.video_rejected, n),
        r_dw: ratio(c.video_downgraded, n),
        r_dc: ratio(c.video_discarded, n),
        r_v,
        r_rj_post_injection: ratio(
            c.video_rejected_post_injection,
            c.video_arrivals_post_injection,
        ),
        counts: c,
    }
}

/// Sample mean and unbiased sample variance of the values present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Zero for a single sample.
    pub variance: f64,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Stat { n, mean, variance })
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    /// Two-sided Student-t confidence interval for the mean.
    pub fn confidence_interval(&self, level: f64) -> (f64, f64) {
        if self.n < 2 {
            return (self.mean, self.mean);
        }
        let t = StudentsT::new(0.0, 1.0, (self.n - 1) as f64)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.5 + level / 2.0);
        let h = t * self.std_error();
        (self.mean - h, self.mean + h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub t_ms: Vec<f64>,
    /// `[dim][k]`
    pub mean_m: Vec<Vec<f64>>,
    pub var_m: Vec<Vec<f64>>,
    pub mean_rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub replications: usize,
    pub rho_avg: Option<Stat>,
    pub burst_period_ms: Option<Stat>,
    pub burst_duration_ms: Option<Stat>,
    pub r_rj: Option<Stat>,
    pub r_dw: Option<Stat>,
    pub r_dc: Option<Stat>,
    pub r_v: Option<Stat>,
    pub r_rj_post_injection: Option<Stat>,
    pub n_ga: Option<Stat>,
    pub curves: Curves,
}

/// Cross-replication statistics. All summaries must share one grid.
pub fn aggregate(summaries: &[ReplicationSummary]) -> Result<ExperimentSummary> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to aggregate".into()))?;
    let points = first.rho_t.len();
    let dims = first.m_t.len();
    for s in summaries {
        if s.grid_ms != first.grid_ms || s.rho_t.len() != points || s.m_t.len() != dims {
            return Err(Error::InvalidArgument(
                "replication summaries use different grids".into(),
            ));
        }
    }
    let stat = |f: &dyn Fn(&ReplicationSummary) -> Option<f64>| {
        let v: Vec<f64> = summaries.iter().filter_map(f).collect();
        Stat::from_values(&v)
    };
    let at = |f: &dyn Fn(&ReplicationSummary, usize) -> f64| -> Vec<Stat> {
        (0..points)
            .map(|k| {
                let v: Vec<f64> = summaries.iter().map(|s| f(s, k)).collect();
                Stat::from_values(&v).expect("non-empty")
            })
            .collect()
    };
    let mut mean_m = Vec::with_capacity(dims);
    let mut var_m = Vec::with_capacity(dims);
    for d in 0..dims {
        let st = at(&|s, k| f64::from(s.m_t[d][k]));
        mean_m.push(st.iter().map(|s| s.mean).collect());
        var_m.push(st.iter().map(|s| s.variance).collect());
    }
    let mean_rho = at(&|s, k| s.rho_t[k]).iter().map(|s| s.mean).collect();
    Ok(ExperimentSummary {
        replications: summaries.len(),
        rho_avg: stat(&|s| Some(s.rho_avg)),
        burst_period_ms: stat(&|s| s.burst_period_ms),
        burst_duration_ms: stat(&|s| s.burst_duration_ms),
        r_rj: stat(&|s| s.r_rj),
        r_dw: stat(&|s| s.r_dw),
        r_dc: stat(&|s| s.r_dc),
        r_v: stat(&|s| s.r_v),
        r_rj_post_injection: stat(&|s| s.r_rj_post_injection),
        n_ga: stat(&|s| Some(s.n_ga() as f64)),
        curves: Curves {
            t_ms: (0..points).map(|k| k as f64 * first.grid_ms).collect(),
            mean_m,
            var_m,
            mean_rho,
        },
    })
}
