//! Event-driven Monte-Carlo simulation of the loss models, with a transient
//! injection of high-priority sessions.
//!
//! Rates are per second, trajectory times are in milliseconds. Every
//! replication owns a ChaCha8 generator seeded from `(base_seed, index)`;
//! independent streams of that generator feed the warm-up draw, the event
//! race, departures, retries and each class's arrivals. Results therefore do
//! not depend on how replications are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LossModel, SystemState, TransitionKind};
use crate::numerology::RadioConfig;

const MS_PER_S: f64 = 1000.0;

const STREAM_EVENTS: u64 = 0;
const STREAM_WARMUP: u64 = 1;
const STREAM_DEPARTURES: u64 = 2;
const STREAM_RETRIES: u64 = 3;
const STREAM_ARRIVALS: u64 = 16;

/// Largest product-form table built for a stationary warm-up.
const WARMUP_STATE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionMode {
    /// `batch_size` sessions offered at the injection instant.
    Batch,
    /// Poisson arrivals at `poisson_rate` from the injection instant on.
    Poisson,
    /// Both of the above.
    BatchPlusPoisson,
}

/// How and when sessions of the injected class enter the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSchedule {
    pub mode: InjectionMode,
    pub t_inject_ms: f64,
    pub batch_size: u32,
    /// Per second, active from `t_inject_ms`.
    pub poisson_rate: f64,
    /// Per second and per blocked batch session. A batch session rejected
    /// on arrival stays pending and re-attempts admission at this rate until
    /// admitted; zero drops blocked sessions.
    pub retry_rate: f64,
    /// Class whose arrivals the schedule drives. Before injection the class
    /// has no arrivals at all.
    pub class: usize,
}

impl InjectionSchedule {
    pub fn batch(t_inject_ms: f64, batch_size: u32) -> Self {
        InjectionSchedule {
            mode: InjectionMode::Batch,
            t_inject_ms,
            batch_size,
            poisson_rate: 0.0,
            retry_rate: 0.0,
            class: 0,
        }
    }

    fn batch_count(&self) -> u32 {
        match self.mode {
            InjectionMode::Poisson => 0,
            _ => self.batch_size,
        }
    }

    fn stream_rate(&self) -> f64 {
        match self.mode {
            InjectionMode::Batch => 0.0,
            _ => self.poisson_rate,
        }
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if !(self.t_inject_ms.is_finite() && self.t_inject_ms >= 0.0) {
            return Err(Error::Validation(
                "t_inject_ms must be finite and non-negative".into(),
            ));
        }
        for (name, v) in [
            ("poisson_rate", self.poisson_rate),
            ("retry_rate", self.retry_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        if self.class >= classes {
            return Err(Error::Validation(format!(
                "injection class {} does not exist",
                self.class
            )));
        }
        let ok = match self.mode {
            InjectionMode::Batch => self.batch_size > 0,
            InjectionMode::Poisson => self.poisson_rate > 0.0,
            InjectionMode::BatchPlusPoisson => self.batch_size > 0 || self.poisson_rate > 0.0,
        };
        if !ok {
            return Err(Error::Validation(
                "injection needs batch_size > 0 or poisson_rate > 0 for its mode".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Warmup {
    #[default]
    EmptyStart,
    /// Initial sessions of the non-injected classes drawn from their
    /// stationary distribution without the injected class.
    StationaryVideoStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// One exponential holding time at the total rate, then an event chosen
    /// in proportion to its rate.
    #[default]
    Direct,
    /// Each class draws its arrival epochs from its own stream, independent
    /// of the state, so runs of different policies with the same seed see
    /// identical arrival streams (common random numbers).
    CommonArrivals,
}

/// Everything needed to run an experiment. Rates are already in their
/// final (possibly time-scaled) form.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    pub model: LossModel,
    pub radio: Option<RadioConfig>,
    pub injection: Option<InjectionSchedule>,
    pub horizon_ms: f64,
    pub warmup: Warmup,
    pub replications: u32,
    pub base_seed: u64,
    /// Stop a replication once the injected class reaches its session cap.
    pub stop_at_injected_cap: bool,
    pub sampling: Sampling,
}

impl Scenario {
    pub fn new(label: impl Into<String>, model: LossModel, horizon_ms: f64) -> Self {
        Scenario {
            label: label.into(),
            model,
            radio: None,
            injection: None,
            horizon_ms,
            warmup: Warmup::EmptyStart,
            replications: 1,
            base_seed: 0,
            stop_at_injected_cap: false,
            sampling: Sampling::Direct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_ms.is_finite() && self.horizon_ms > 0.0) {
            return Err(Error::Validation("horizon_ms must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::Validation("replications must be at least 1".into()));
        }
        if let Some(inj) = &self.injection {
            inj.validate(self.model.classes().len())?;
            if self.horizon_ms <= inj.t_inject_ms {
                return Err(Error::Validation(
                    "horizon_ms must be greater than t_inject_ms".into(),
                ));
            }
        } else if self.stop_at_injected_cap {
            return Err(Error::Validation(
                "early stop needs an injection schedule".into(),
            ));
        }
        Ok(())
    }

    /// Class driven by the injection schedule, if any.
    pub fn injected_class(&self) -> Option<usize> {
        self.injection.as_ref().map(|i| i.class)
    }
}

/// Where an arrival came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Stream,
    Batch,
    Retry,
    Departure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub t_ms: f64,
    pub class: usize,
    pub dim: usize,
    pub kind: TransitionKind,
    pub origin: Origin,
    pub downgraded: u32,
    pub discarded: u32,
    /// State after the event.
    pub state: SystemState,
}

/// Complete event log of one replication. The state path is piecewise
/// constant and right-continuous. Event times are strictly increasing except
/// within an injected batch, whose sessions share the injection instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub replication: u32,
    pub seed: u64,
    pub initial: SystemState,
    pub events: Vec<SimEvent>,
    /// End of the observation window: the horizon, or the early-stop time.
    pub end_ms: f64,
    pub t_inject_ms: Option<f64>,
}

impl TrajectoryRecord {
    /// State in force at time `t_ms`.
    pub fn state_at(&self, t_ms: f64) -> &SystemState {
        let n = self.events.partition_point(|e| e.t_ms <= t_ms);
        if n == 0 {
            &self.initial
        } else {
            &self.events[n - 1].state
        }
    }

    /// Constant pieces `(start, end, state)` covering `[0, end_ms]`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, &SystemState)> + '_ {
        let starts = std::iter::once((0.0, &self.initial))
            .chain(self.events.iter().map(|e| (e.t_ms, &e.state)));
        let ends = self
            .events
            .iter()
            .map(|e| e.t_ms)
            .chain(std::iter::once(self.end_ms));
        starts
            .zip(ends)
            .map(|((s, st), e)| (s, e, st))
            .filter(|(s, e, _)| e > s)
    }
}

/// Seed of replication `r`: a SplitMix64 mix of the base seed and index.
pub fn replication_seed(base_seed: u64, replication: u32) -> u64 {
    splitmix64(base_seed ^ splitmix64(u64::from(replication).wrapping_add(1)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn exp_ms(rng: &mut ChaCha8Rng, rate_per_s: f64) -> f64 {
    if rate_per_s <= 0.0 {
        return f64::INFINITY;
    }
    let e: f64 = rng.sample(Exp1);
    e / rate_per_s * MS_PER_S
}

/// Initial-state distribution, fixed for all replications of a scenario.
#[derive(Debug, Clone)]
enum InitialState {
    Fixed(SystemState),
    Drawn {
        states: Vec<SystemState>,
        cumulative: Vec<f64>,
    },
}

/// A validated scenario with its warm-up distribution prepared.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    initial: InitialState,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let initial = match scenario.warmup {
            Warmup::EmptyStart => InitialState::Fixed(scenario.model.empty_state()),
            Warmup::StationaryVideoStart => stationary_start(scenario)?,
        };
        Ok(Simulator { scenario, initial })
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    /// Probability of each possible initial state.
    pub fn initial_distribution(&self) -> Vec<(SystemState, f64)> {
        match &self.initial {
            InitialState::Fixed(s) => vec![(s.clone(), 1.0)],
            InitialState::Drawn { states, cumulative } => {
                let total = cumulative[cumulative.len() - 1];
                let mut prev = 0.0;
                states
                    .iter()
                    .zip(cumulative)
                    .map(|(s, &c)| {
                        let p = (c - prev) / total;
                        prev = c;
                        (s.clone(), p)
                    })
                    .collect()
            }
        }
    }

    /// Runs replication `replication` with its derived seed.
    pub fn run_indexed(&self, replication: u32) -> TrajectoryRecord {
        let seed = replication_seed(self.scenario.base_seed, replication);
        let mut rec = self.run(seed);
        rec.replication = replication;
        rec
    }

    /// Runs one replication from an explicit seed.
    pub fn run(&self, seed: u64) -> TrajectoryRecord {
        let initial = match &self.initial {
            InitialState::Fixed(s) => s.clone(),
            InitialState::Drawn { states, cumulative } => {
                let mut rng = stream(seed, STREAM_WARMUP);
                let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let i = cumulative
                    .partition_point(|&c| c <= u)
                    .min(states.len() - 1);
                states[i].clone()
            }
        };
        let mut run = Run::new(self.scenario, seed, initial);
        match self.scenario.sampling {
            Sampling::Direct => run.direct(),
            Sampling::CommonArrivals => run.common_arrivals(),
        }
        run.finish()
    }
}

/// One replication of `scenario` from an explicit seed.
pub fn run_replication(scenario: &Scenario, seed: u64) -> Result<TrajectoryRecord> {
    Ok(Simulator::new(scenario)?.run(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// All replications of `scenario`, in replication order.
pub fn run_experiment(scenario: &Scenario) -> Result<Vec<TrajectoryRecord>> {
    run_experiment_with(scenario, Execution::Parallel)
}

pub fn run_experiment_with(
    scenario: &Scenario,
    execution: Execution,
) -> Result<Vec<TrajectoryRecord>> {
    let sim = Simulator::new(scenario)?;
    let reps = 0..scenario.replications;
    Ok(match execution {
        Execution::Serial => reps.map(|r| sim.run_indexed(r)).collect(),
        Execution::Parallel => reps.into_par_iter().map(|r| sim.run_indexed(r)).collect(),
    })
}

fn stationary_start(scenario: &Scenario) -> Result<InitialState> {
    let model = &scenario.model;
    let injected = scenario.injected_class();
    // full-rate dimensions of the classes that run from time zero
    let warm: Vec<usize> = model
        .dims()
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.downgraded && Some(d.class) != injected)
        .map(|(i, _)| i)
        .collect();
    // product form: P(n) ~ prod a_i^n_i / n_i! over states that fit
    let mut states = Vec::new();
    let mut log_w = Vec::new();
    let mut counts = vec![0u32; model.num_dims()];
    enumerate_warm(model, &warm, 0, 0, &mut counts, &mut |c: &[u32]| {
        let lw: f64 = warm
            .iter()
            .map(|&d| {
                let class = &model.classes()[model.dims()[d].class];
                match c[d] {
                    0 => 0.0,
                    n => f64::from(n) * class.offered_load().ln() - ln_factorial(n),
                }
            })
            .sum();
        states.push(SystemState::new(c.to_vec()));
        log_w.push(lw);
        states.len() <= WARMUP_STATE_LIMIT
    });
    if states.len() > WARMUP_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            size: states.len() as u128,
            limit: WARMUP_STATE_LIMIT,
        });
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    let cumulative: Vec<f64> = log_w
        .iter()
        .map(|lw| {
            acc += (lw - max).exp();
            acc
        })
        .collect();
    Ok(InitialState::Drawn { states, cumulative })
}

fn enumerate_warm(
    model: &LossModel,
    warm: &[usize],
    pos: usize,
    used: u32,
    counts: &mut [u32],
    visit: &mut dyn FnMut(&[u32]) -> bool,
) -> bool {
    if pos == warm.len() {
        return visit(counts);
    }
    let d = model.dims()[warm[pos]];
    let mut n = 0;
    loop {
        counts[warm[pos]] = n;
        if !enumerate_warm(
            model,
            warm,
            pos + 1,
            used + n * d.demand_blocks,
            counts,
            visit,
        ) {
            return false;
        }
        n += 1;
        if n > d.max_sessions || used + n * d.demand_blocks > model.capacity() {
            break;
        }
    }
    counts[warm[pos]] = 0;
    true
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

struct Run<'a> {
    scenario: &'a Scenario,
    model: &'a LossModel,
    seed: u64,
    initial: SystemState,
    state: Vec<u32>,
    t: f64,
    events: Vec<SimEvent>,
    pending: u32,
    injected: bool,
    stopped: bool,
}

impl<'a> Run<'a> {
    fn new(scenario: &'a Scenario, seed: u64, initial: SystemState) -> Self {
        Run {
            scenario,
            model: &scenario.model,
            seed,
            state: initial.to_vec(),
            initial,
            t: 0.0,
            events: Vec::new(),
            pending: 0,
            injected: scenario.injection.is_none(),
            stopped: false,
        }
    }

    fn finish(self) -> TrajectoryRecord {
        TrajectoryRecord {
            replication: 0,
            seed: self.seed,
            initial: self.initial,
            events: self.events,
            end_ms: if self.stopped {
                self.t
            } else {
                self.scenario.horizon_ms
            },
            t_inject_ms: self.scenario.injection.as_ref().map(|i| i.t_inject_ms),
        }
    }

    /// Current arrival rate of `class`.
    fn arrival_rate(&self, class: usize) -> f64 {
        match &self.scenario.injection {
            Some(inj) if inj.class == class => {
                if self.injected {
                    inj.stream_rate()
                } else {
                    0.0
                }
            }
            _ => self.model.classes()[class].arrival_rate,
        }
    }

    fn retry_rate(&self) -> f64 {
        self.scenario
            .injection
            .as_ref()
            .map_or(0.0, |inj| f64::from(self.pending) * inj.retry_rate)
    }

    fn next_boundary(&self) -> f64 {
        match &self.scenario.injection {
            Some(inj) if !self.injected => inj.t_inject_ms,
            _ => self.scenario.horizon_ms,
        }
    }

    /// Handles reaching the next boundary; false when the run is over.
    fn cross_boundary(&mut self) -> bool {
        self.t = self.next_boundary();
        if self.injected {
            return false;
        }
        self.injected = true;
        let inj = self
            .scenario
            .injection
            .clone()
            .expect("boundary before injection");
        for _ in 0..inj.batch_count() {
            let admitted = self.arrive(inj.class, Origin::Batch);
            if !admitted && inj.retry_rate > 0.0 {
                self.pending += 1;
            }
            if self.stopped {
                break;
            }
        }
        !self.stopped
    }

    fn arrive(&mut self, class: usize, origin: Origin) -> bool {
        let a = self.model.admit(&self.state, class);
        let admitted = a.admitted();
        self.state.copy_from_slice(&a.target);
        self.record(class, a.dim, a.kind, origin, a.downgraded, a.discarded);
        admitted
    }

    fn retry(&mut self) {
        let class = self
            .scenario
            .injection
            .as_ref()
            .expect("retry needs injection")
            .class;
        if self.arrive(class, Origin::Retry) {
            self.pending -= 1;
        }
    }

    fn depart(&mut self, dim: usize) {
        self.state[dim] -= 1;
        let class = self.model.dims()[dim].class;
        self.record(
            class,
            dim,
            TransitionKind::Departure,
            Origin::Departure,
            0,
            0,
        );
    }

    fn record(
        &mut self,
        class: usize,
        dim: usize,
        kind: TransitionKind,
        origin: Origin,
        downgraded: u32,
        discarded: u32,
    ) {
        assert!(
            self.model.is_feasible(&self.state),
            "simulation reached infeasible state {:?}",
            self.state
        );
        self.events.push(SimEvent {
            t_ms: self.t,
            class,
            dim,
            kind,
            origin,
            downgraded,
            discarded,
            state: SystemState::new(self.state.clone()),
        });
        if self.scenario.stop_at_injected_cap {
            if let Some(inj) = &self.scenario.injection {
                let d = &self.model.dims()[inj.class];
                if self.state[inj.class] >= d.max_sessions {
                    self.stopped = true;
                }
            }
        }
    }

    fn pick_departure(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (dim, d) in self.model.dims().iter().enumerate() {
            if self.state[dim] == 0 {
                continue;
            }
            acc += f64::from(self.state[dim]) * d.service_rate;
            last = dim;
            if u < acc {
                return dim;
            }
        }
        last
    }

    fn direct(&mut self) {
        let mut rng = stream(self.seed, STREAM_EVENTS);
        let classes = self.model.classes().len();
        let mut rates = vec![0.0; classes];
        loop {
            for (c, r) in rates.iter_mut().enumerate() {
                *r = self.arrival_rate(c);
            }
            let arrivals: f64 = rates.iter().sum();
            let retry = self.retry_rate();
            let departures = self.model.departure_rate(&self.state);
            let total = arrivals + retry + departures;
            let dt = exp_ms(&mut rng, total);
            if self.t + dt >= self.next_boundary() {
                if !self.cross_boundary() {
                    return;
                }
                continue;
            }
            self.t += dt;
            let mut u = rng.random::<f64>() * total;
            if u < arrivals {
                let mut class = classes - 1;
                for (c, &r) in rates.iter().enumerate() {
                    if u < r {
                        class = c;
                        break;
                    }
                    u -= r;
                }
                self.arrive(class, Origin::Stream);
            } else if u < arrivals + retry {
                self.retry();
            } else {
                let dim = self.pick_departure(u - arrivals - retry);
                self.depart(dim);
            }
            if self.stopped {
                return;
            }
        }
    }

    fn common_arrivals(&mut self) {
        let classes = self.model.classes().len();
        let mut arrival_rngs: Vec<ChaCha8Rng> = (0..classes)
            .map(|c| stream(self.seed, STREAM_ARRIVALS + c as u64))
            .collect();
        let mut dep_rng = stream(self.seed, STREAM_DEPARTURES);
        let mut retry_rng = stream(self.seed, STREAM_RETRIES);
        let mut next: Vec<f64> = (0..classes)
            .map(|c| exp_ms(&mut arrival_rngs[c], self.arrival_rate(c)))
            .collect();
        loop {
            let departures = self.model.departure_rate(&self.state);
            let t_dep = self.t + exp_ms(&mut dep_rng, departures);
            let t_retry = self.t + exp_ms(&mut retry_rng, self.retry_rate());
            let (class, t_arr) = next.iter().copied().enumerate().fold(
                (usize::MAX, f64::INFINITY),
                |best, (c, t)| {
                    if t < best.1 {
                        (c, t)
                    } else {
                        best
                    }
                },
            );
            let boundary = self.next_boundary();
            let first = t_arr.min(t_dep).min(t_retry);
            if first >= boundary {
                let was_injected = self.injected;
                if !self.cross_boundary() {
                    return;
                }
                if !was_injected {
                    let inj = self.scenario.injection.as_ref().expect("injection").class;
                    next[inj] = self.t + exp_ms(&mut arrival_rngs[inj], self.arrival_rate(inj));
                }
                continue;
            }
            if t_arr == first {
                self.t = t_arr;
                next[class] = t_arr + exp_ms(&mut arrival_rngs[class], self.arrival_rate(class));
                self.arrive(class, Origin::Stream);
            } else if t_dep == first {
                self.t = t_dep;
                let u = dep_rng.random::<f64>() * departures;
                let dim = self.pick_departure(u);
                self.depart(dim);
            } else {
                self.t = t_retry;
                self.retry();
            }
            if self.stopped {
                return;
            }
        }
    }
}
