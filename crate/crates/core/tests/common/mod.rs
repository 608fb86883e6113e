#![allow(dead_code)]

use std::path::PathBuf;

use nrslice::metrics::{summarize, ReplicationSummary};
use nrslice::model::{LossModel, Policy, Priority, TrafficClass};
use nrslice::scenario::{load_scenario, LoadedScenario};
use nrslice::sim::run_experiment;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

pub fn load(name: &str) -> LoadedScenario {
    load_scenario(scenario_path(name)).unwrap()
}

pub fn summaries(loaded: &LoadedScenario) -> Vec<ReplicationSummary> {
    let sc = &loaded.scenario;
    run_experiment(sc)
        .unwrap()
        .iter()
        .map(|t| summarize(t, sc, &loaded.metrics))
        .collect()
}

/// Reference GOOSE and video classes with literal rates, `C = 62`.
pub fn table2(policy: Policy, video_rate: f64) -> LossModel {
    let mut goose = TrafficClass::new("goose", 1.0, 1.0 / 60.0, 1, 62);
    let mut video = TrafficClass::new("video", video_rate, 1.0 / 600.0, 2, 31);
    if policy != Policy::Nc1 {
        goose = goose.with_priority(Priority::High);
        video = video.with_priority(Priority::Low);
    }
    if policy == Policy::Nc3 {
        video = video.adaptive(1);
    }
    LossModel::new(policy, vec![goose, video], 62).unwrap()
}

/// Every count vector within the per-dimension caps and the capacity,
/// enumerated without the library's own state-space code.
pub fn feasible_states(model: &LossModel) -> Vec<Vec<u32>> {
    fn rec(model: &LossModel, i: usize, used: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let dims = model.dims();
        if i == dims.len() {
            out.push(cur.clone());
            return;
        }
        let d = dims[i];
        let mut n = 0;
        while n <= d.max_sessions && used + n * d.demand_blocks <= model.capacity() {
            cur.push(n);
            rec(model, i + 1, used + n * d.demand_blocks, cur, out);
            cur.pop();
            n += 1;
        }
    }
    let mut out = Vec::new();
    rec(model, 0, 0, &mut Vec::new(), &mut out);
    out
}

/// Outcome of a high-priority arrival found by trying every combination of
/// `k` downgrades and `j` discards.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleAdmission {
    pub target: Vec<u32>,
    pub downgraded: u32,
    pub discarded: u32,
}

/// Brute-force resolution of a high-priority arrival under `Nc2`/`Nc3`:
/// `Nc2` discards as few full-rate sessions as possible; `Nc3` downgrades as
/// few as possible and, only if downgrading every one is not enough,
/// discards as few downgraded sessions as possible. `None` iff no
/// combination at all makes room.
pub fn oracle_high_arrival(model: &LossModel, state: &[u32]) -> Option<OracleAdmission> {
    let hi = model.high_priority_class().unwrap();
    let lo = model.low_priority_class().unwrap();
    let dims = model.dims();
    let cap = model.capacity();
    if state[hi] + 1 > dims[hi].max_sessions {
        return None;
    }
    let fits = |s: &[u32]| {
        s.iter()
            .zip(dims)
            .map(|(&n, d)| n * d.demand_blocks)
            .sum::<u32>()
            <= cap
    };
    let mut options = Vec::new();
    match model.downgraded_dim() {
        None => {
            for j in 0..=state[lo] {
                let mut s = state.to_vec();
                s[hi] += 1;
                s[lo] -= j;
                if fits(&s) {
                    options.push(OracleAdmission {
                        target: s,
                        downgraded: 0,
                        discarded: j,
                    });
                }
            }
            options.into_iter().min_by_key(|o| o.discarded)
        }
        Some(down) => {
            for k in 0..=state[lo] {
                for j in 0..=state[down] + k {
                    let mut s = state.to_vec();
                    s[hi] += 1;
                    s[lo] -= k;
                    s[down] += k;
                    s[down] -= j;
                    if fits(&s) && s[down] <= dims[down].max_sessions {
                        options.push(OracleAdmission {
                            target: s,
                            downgraded: k,
                            discarded: j,
                        });
                    }
                }
            }
            if options.is_empty() {
                return None;
            }
            if let Some(o) = options
                .iter()
                .filter(|o| o.discarded == 0)
                .min_by_key(|o| o.downgraded)
            {
                return Some(o.clone());
            }
            options
                .into_iter()
                .filter(|o| o.downgraded == state[lo])
                .min_by_key(|o| o.discarded)
        }
    }
}

/// Erlang B by the standard recursion `B(n) = a B(n-1) / (n + a B(n-1))`.
pub fn erlang_b(a: f64, servers: u32) -> f64 {
    let mut b = 1.0;
    for n in 1..=servers {
        b = a * b / (f64::from(n) + a * b);
    }
    b
}

/// Checks every transition out of every feasible state of a priority model
/// against caps, capacity, the downgrade-before-discard order and the
/// brute-force admission oracle. Returns the number of states checked.
pub fn check_policy_invariants(model: &LossModel) -> Result<usize, String> {
    use nrslice::model::TransitionKind;

    let hi = model.high_priority_class();
    let states = feasible_states(model);
    for s in &states {
        for t in model.transitions(s) {
            if !model.is_feasible(&t.target) {
                return Err(format!(
                    "{s:?}: {:?} leads to infeasible {}",
                    t.kind, t.target
                ));
            }
            if t.kind == TransitionKind::ArrivalRejected && t.target.counts() != s.as_slice() {
                return Err(format!("{s:?}: rejection changed the state"));
            }
            if let (Some(lo), Some(_)) = (model.low_priority_class(), model.downgraded_dim()) {
                if t.discarded > 0 && t.target[lo] > 0 {
                    return Err(format!(
                        "{s:?}: discarded {} while {} full-rate sessions remain",
                        t.discarded, t.target[lo]
                    ));
                }
            }
            if Some(t.class) == hi && t.kind.is_arrival() {
                let oracle = oracle_high_arrival(model, s);
                match (&oracle, t.kind) {
                    (None, TransitionKind::ArrivalRejected) => {}
                    (None, k) => return Err(format!("{s:?}: oracle rejects, model gives {k:?}")),
                    (Some(o), TransitionKind::ArrivalRejected) => {
                        return Err(format!(
                            "{s:?}: model rejects, oracle admits to {:?}",
                            o.target
                        ))
                    }
                    (Some(o), _) => {
                        if o.target != t.target.counts()
                            || o.downgraded != t.downgraded
                            || o.discarded != t.discarded
                        {
                            return Err(format!(
                                "{s:?}: model -> {} (dg {}, dc {}), oracle -> {:?} (dg {}, dc {})",
                                t.target,
                                t.downgraded,
                                t.discarded,
                                o.target,
                                o.downgraded,
                                o.discarded
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(states.len())
}
