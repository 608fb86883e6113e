//! Multi-class loss model over a shared block pool and the three admission
//! policies:
//!
//! * [`Policy::Nc1`]: complete sharing, no priority. An arrival is accepted
//!   iff it fits.
//! * [`Policy::Nc2`]: a high-priority arrival that does not fit discards the
//!   fewest ongoing low-priority sessions needed to make room.
//! * [`Policy::Nc3`]: like `Nc2`, but the low-priority class is adaptive.
//!   Ongoing full-rate sessions are downgraded first, downgraded sessions are
//!   discarded only when downgrading everything is not enough. A low-priority
//!   arrival that does not fit at full rate is admitted downgraded if it can.
//!
//! Sessions of one dimension are exchangeable, so a state is just the vector
//! of per-dimension counts. Under `Nc3` the adaptive class occupies two
//! dimensions (full rate, then downgraded), appended after the classes.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Shared pool, no priority.
    Nc1,
    /// Priority with preemptive discard.
    Nc2,
    /// Priority with adaptive downgrade, then discard.
    Nc3,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Nc1 => "nc1",
            Policy::Nc2 => "nc2",
            Policy::Nc3 => "nc3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    High,
    Low,
    #[default]
    None,
}

/// Reduced-rate operating point of an adaptive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Downgrade {
    pub demand_blocks: u32,
    /// Departure rate of a downgraded session, per second.
    pub service_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficClass {
    pub name: String,
    /// Poisson arrival rate, per second.
    pub arrival_rate: f64,
    /// Per-session departure rate, per second.
    pub service_rate: f64,
    pub demand_blocks: u32,
    pub max_sessions: u32,
    pub priority: Priority,
    pub downgrade: Option<Downgrade>,
}

impl TrafficClass {
    pub fn new(
        name: impl Into<String>,
        arrival_rate: f64,
        service_rate: f64,
        demand_blocks: u32,
        max_sessions: u32,
    ) -> Self {
        TrafficClass {
            name: name.into(),
            arrival_rate,
            service_rate,
            demand_blocks,
            max_sessions,
            priority: Priority::None,
            downgrade: None,
        }
    }

    pub fn with_priority(mut self, priority: Priority) -> Self {
        self.priority = priority;
        self
    }

    /// Makes the class adaptive. The downgraded departure rate defaults to
    /// the full-rate one.
    pub fn adaptive(mut self, demand_blocks: u32) -> Self {
        self.downgrade = Some(Downgrade {
            demand_blocks,
            service_rate: self.service_rate,
        });
        self
    }

    pub fn with_downgraded_service_rate(mut self, rate: f64) -> Self {
        if let Some(d) = self.downgrade.as_mut() {
            d.service_rate = rate;
        }
        self
    }

    /// Offered load in erlangs.
    pub fn offered_load(&self) -> f64 {
        self.arrival_rate / self.service_rate
    }
}

/// Active sessions per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemState(Vec<u32>);

impl SystemState {
    pub fn new(counts: Vec<u32>) -> Self {
        SystemState(counts)
    }

    pub fn empty(dims: usize) -> Self {
        SystemState(vec![0; dims])
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn counts_mut(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.0
    }
}

impl Deref for SystemState {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for SystemState {
    fn from(v: Vec<u32>) -> Self {
        SystemState(v)
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// One coordinate of the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dimension {
    pub class: usize,
    pub downgraded: bool,
    pub demand_blocks: u32,
    pub service_rate: f64,
    pub max_sessions: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    ArrivalAccepted,
    ArrivalRejected,
    ArrivalDowngraded,
    Departure,
    PreemptDiscard,
    DowngradeCascade,
}

impl TransitionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransitionKind::ArrivalAccepted => "arrival_accepted",
            TransitionKind::ArrivalRejected => "arrival_rejected",
            TransitionKind::ArrivalDowngraded => "arrival_downgraded",
            TransitionKind::Departure => "departure",
            TransitionKind::PreemptDiscard => "preempt_discard",
            TransitionKind::DowngradeCascade => "downgrade_cascade",
        }
    }

    pub fn is_arrival(&self) -> bool {
        !matches!(self, TransitionKind::Departure)
    }
}

/// Outcome of one arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub kind: TransitionKind,
    pub target: SystemState,
    /// Dimension the arriving session joined (its class dimension if rejected).
    pub dim: usize,
    /// Low-priority sessions downgraded by this event, including a
    /// downgraded admission of the arriving session.
    pub downgraded: u32,
    pub discarded: u32,
}

impl Admission {
    pub fn admitted(&self) -> bool {
        self.kind != TransitionKind::ArrivalRejected
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub class: usize,
    pub dim: usize,
    pub kind: TransitionKind,
    pub target: SystemState,
    pub rate: f64,
    pub downgraded: u32,
    pub discarded: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PriorityRoles {
    high: usize,
    low: usize,
    /// Dimension of downgraded low-priority sessions (`Nc3` only).
    low_down: Option<usize>,
}

/// A validated loss model: policy, classes and capacity in blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    policy: Policy,
    classes: Vec<TrafficClass>,
    capacity: u32,
    dims: Vec<Dimension>,
    roles: Option<PriorityRoles>,
}

impl LossModel {
    pub fn new(policy: Policy, classes: Vec<TrafficClass>, capacity: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("capacity must be positive".into()));
        }
        if classes.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one traffic class required".into(),
            ));
        }
        for c in &classes {
            if c.demand_blocks == 0 {
                return Err(Error::InvalidArgument(format!(
                    "class {}: demand must be at least one block",
                    c.name
                )));
            }
            if !(c.arrival_rate.is_finite() && c.arrival_rate >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "class {}: arrival rate must be finite and non-negative",
                    c.name
                )));
            }
            if !(c.service_rate.is_finite() && c.service_rate > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "class {}: service rate must be finite and positive",
                    c.name
                )));
            }
            if let Some(d) = &c.downgrade {
                if d.demand_blocks == 0 || d.demand_blocks >= c.demand_blocks {
                    return Err(Error::InvalidArgument(format!(
                        "class {}: downgraded demand must be smaller than the full-rate demand and at least one block",
                        c.name
                    )));
                }
                if !(d.service_rate.is_finite() && d.service_rate > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "class {}: downgraded service rate must be finite and positive",
                        c.name
                    )));
                }
            }
        }

        let mut dims: Vec<Dimension> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| Dimension {
                class: i,
                downgraded: false,
                demand_blocks: c.demand_blocks,
                service_rate: c.service_rate,
                max_sessions: c.max_sessions,
            })
            .collect();

        let adaptive = classes.iter().filter(|c| c.downgrade.is_some()).count();
        let roles = match policy {
            Policy::Nc1 => {
                if adaptive > 0 {
                    return Err(Error::InvalidArgument(
                        "adaptive classes are only supported under nc3".into(),
                    ));
                }
                if classes.iter().any(|c| c.priority != Priority::None) {
                    return Err(Error::InvalidArgument(
                        "nc1 has no priority; every class must use priority none".into(),
                    ));
                }
                None
            }
            Policy::Nc2 | Policy::Nc3 => {
                let (high, low) = priority_pair(&classes, policy)?;
                let low_down = if policy == Policy::Nc3 {
                    let d = classes[low].downgrade.ok_or_else(|| {
                        Error::InvalidArgument(
                            "nc3 requires the low-priority class to be adaptive".into(),
                        )
                    })?;
                    dims.push(Dimension {
                        class: low,
                        downgraded: true,
                        demand_blocks: d.demand_blocks,
                        service_rate: d.service_rate,
                        max_sessions: capacity / d.demand_blocks,
                    });
                    Some(dims.len() - 1)
                } else {
                    if adaptive > 0 {
                        return Err(Error::InvalidArgument(
                            "adaptive classes are only supported under nc3".into(),
                        ));
                    }
                    None
                };
                Some(PriorityRoles {
                    high,
                    low,
                    low_down,
                })
            }
        };

        Ok(LossModel {
            policy,
            classes,
            capacity,
            dims,
            roles,
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn classes(&self) -> &[TrafficClass] {
        &self.classes
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn num_dims(&self) -> usize {
        self.dims.len()
    }

    /// Index of the high-priority class under `Nc2`/`Nc3`.
    pub fn high_priority_class(&self) -> Option<usize> {
        self.roles.map(|r| r.high)
    }

    /// Index of the low-priority class under `Nc2`/`Nc3`.
    pub fn low_priority_class(&self) -> Option<usize> {
        self.roles.map(|r| r.low)
    }

    /// Dimension holding downgraded sessions under `Nc3`.
    pub fn downgraded_dim(&self) -> Option<usize> {
        self.roles.and_then(|r| r.low_down)
    }

    pub fn empty_state(&self) -> SystemState {
        SystemState::empty(self.dims.len())
    }

    /// Blocks in use: the sum over dimensions of count times demand.
    pub fn occupied(&self, state: &[u32]) -> u32 {
        state
            .iter()
            .zip(&self.dims)
            .map(|(&n, d)| n * d.demand_blocks)
            .sum()
    }

    pub fn is_feasible(&self, state: &[u32]) -> bool {
        state.len() == self.dims.len()
            && state
                .iter()
                .zip(&self.dims)
                .all(|(&n, d)| n <= d.max_sessions)
            && self.occupied(state) <= self.capacity
    }

    /// True iff one more session of dimension `dim` fits without any
    /// preemption: capacity and the per-dimension cap both allow it.
    pub fn admissible(&self, state: &[u32], dim: usize) -> bool {
        let d = &self.dims[dim];
        state[dim] < d.max_sessions && self.occupied(state) + d.demand_blocks <= self.capacity
    }

    /// Resolves an arrival of `class` in `state` under the model's policy.
    pub fn admit(&self, state: &[u32], class: usize) -> Admission {
        let roles = match self.roles {
            Some(r) => r,
            None => return self.admit_plain(state, class),
        };
        if class == roles.high {
            match roles.low_down {
                None => self.admit_preempting(state, roles),
                Some(down) => self.admit_downgrading(state, roles, down),
            }
        } else if class == roles.low && roles.low_down.is_some() {
            self.admit_adaptive(state, roles)
        } else {
            self.admit_plain(state, class)
        }
    }

    fn admit_plain(&self, state: &[u32], dim: usize) -> Admission {
        if self.admissible(state, dim) {
            accepted(state, dim, TransitionKind::ArrivalAccepted, 0)
        } else {
            rejected(state, dim)
        }
    }

    fn admit_preempting(&self, state: &[u32], roles: PriorityRoles) -> Admission {
        let (h, l) = (roles.high, roles.low);
        if self.admissible(state, h) {
            return accepted(state, h, TransitionKind::ArrivalAccepted, 0);
        }
        if state[h] >= self.dims[h].max_sessions {
            return rejected(state, h);
        }
        let need = self.occupied(state) + self.dims[h].demand_blocks - self.capacity;
        let victims = need.div_ceil(self.dims[l].demand_blocks);
        if victims > state[l] {
            return rejected(state, h);
        }
        let mut target = state.to_vec();
        target[h] += 1;
        target[l] -= victims;
        Admission {
            kind: TransitionKind::PreemptDiscard,
            target: SystemState(target),
            dim: h,
            downgraded: 0,
            discarded: victims,
        }
    }

    fn admit_downgrading(&self, state: &[u32], roles: PriorityRoles, down: usize) -> Admission {
        let (h, full) = (roles.high, roles.low);
        if self.admissible(state, h) {
            return accepted(state, h, TransitionKind::ArrivalAccepted, 0);
        }
        if state[h] >= self.dims[h].max_sessions {
            return rejected(state, h);
        }
        let need = self.occupied(state) + self.dims[h].demand_blocks - self.capacity;
        let gain = self.dims[full].demand_blocks - self.dims[down].demand_blocks;
        let downgrades = state[full].min(need.div_ceil(gain));
        let mut target = state.to_vec();
        target[h] += 1;
        target[full] -= downgrades;
        target[down] += downgrades;
        let freed = downgrades * gain;
        if freed >= need {
            return Admission {
                kind: TransitionKind::DowngradeCascade,
                target: SystemState(target),
                dim: h,
                downgraded: downgrades,
                discarded: 0,
            };
        }
        // every full-rate session is now downgraded
        let discards = (need - freed).div_ceil(self.dims[down].demand_blocks);
        if discards > target[down] {
            return rejected(state, h);
        }
        target[down] -= discards;
        Admission {
            kind: TransitionKind::PreemptDiscard,
            target: SystemState(target),
            dim: h,
            downgraded: downgrades,
            discarded: discards,
        }
    }

    fn admit_adaptive(&self, state: &[u32], roles: PriorityRoles) -> Admission {
        let full = roles.low;
        let down = roles
            .low_down
            .expect("adaptive admission needs a downgraded dimension");
        if self.admissible(state, full) {
            accepted(state, full, TransitionKind::ArrivalAccepted, 0)
        } else if self.admissible(state, down) {
            accepted(state, down, TransitionKind::ArrivalDowngraded, 1)
        } else {
            rejected(state, full)
        }
    }

    /// All outgoing events of `state` using the classes' own arrival rates.
    ///
    /// Rejected arrivals appear as self-loop events so that they can be
    /// counted; they carry no probability flow.
    pub fn transitions(&self, state: &[u32]) -> Vec<Transition> {
        let rates: Vec<f64> = self.classes.iter().map(|c| c.arrival_rate).collect();
        self.transitions_with_rates(state, &rates)
    }

    /// As [`transitions`](Self::transitions), with per-class arrival rates
    /// supplied by the caller.
    pub fn transitions_with_rates(&self, state: &[u32], arrival_rates: &[f64]) -> Vec<Transition> {
        let mut out = Vec::with_capacity(self.classes.len() + self.dims.len());
        for (class, &rate) in arrival_rates.iter().enumerate() {
            if rate <= 0.0 {
                continue;
            }
            let a = self.admit(state, class);
            out.push(Transition {
                class,
                dim: a.dim,
                kind: a.kind,
                target: a.target,
                rate,
                downgraded: a.downgraded,
                discarded: a.discarded,
            });
        }
        for (dim, d) in self.dims.iter().enumerate() {
            if state[dim] > 0 {
                let mut target = state.to_vec();
                target[dim] -= 1;
                out.push(Transition {
                    class: d.class,
                    dim,
                    kind: TransitionKind::Departure,
                    target: SystemState(target),
                    rate: f64::from(state[dim]) * d.service_rate,
                    downgraded: 0,
                    discarded: 0,
                });
            }
        }
        out
    }

    /// Total departure rate of `state`.
    pub fn departure_rate(&self, state: &[u32]) -> f64 {
        state
            .iter()
            .zip(&self.dims)
            .map(|(&n, d)| f64::from(n) * d.service_rate)
            .sum()
    }
}

fn priority_pair(classes: &[TrafficClass], policy: Policy) -> Result<(usize, usize)> {
    let find = |p: Priority| -> Vec<usize> {
        classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.priority == p)
            .map(|(i, _)| i)
            .collect()
    };
    let (high, low) = (find(Priority::High), find(Priority::Low));
    if classes.len() != 2 || high.len() != 1 || low.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{policy} needs exactly two classes, one high and one low priority"
        )));
    }
    Ok((high[0], low[0]))
}

fn accepted(state: &[u32], dim: usize, kind: TransitionKind, downgraded: u32) -> Admission {
    let mut target = state.to_vec();
    target[dim] += 1;
    Admission {
        kind,
        target: SystemState(target),
        dim,
        downgraded,
        discarded: 0,
    }
}

fn rejected(state: &[u32], dim: usize) -> Admission {
    Admission {
        kind: TransitionKind::ArrivalRejected,
        target: SystemState(state.to_vec()),
        dim,
        downgraded: 0,
        discarded: 0,
    }
}
