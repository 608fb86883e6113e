//! TOML scenario files.
//!
//! ```toml
//! label = "nc3_lam20"
//! policy = "nc3"
//! horizon_ms = 6000
//! replications = 30
//! base_seed = 1
//! time_scale = 1
//!
//! [radio]
//! channel_bandwidth_khz = 25000
//! numerology = 2
//! num_prbs = 31
//!
//! [[classes]]
//! name = "goose"
//! arrival_rate = 1
//! service_rate = "1/60"
//! demand_khz = 360
//! max_sessions = 62
//! priority = "high"
//!
//! [[classes]]
//! name = "video"
//! arrival_rate = "1/20"
//! service_rate = "1/600"
//! demand_khz = 720
//! max_sessions = 31
//! priority = "low"
//! adaptive = true
//! downgraded_demand_khz = 360
//!
//! [injection]
//! mode = "batch"
//! t_inject_ms = 2000
//! batch_size = 40
//! class = "goose"
//! ```
//!
//! Rates are per second and may be written as numbers or `"a/b"` strings.
//! `time_scale` multiplies every rate; times stay in milliseconds. The
//! allocation block is the greatest common divisor of all demands and the
//! capacity comes from the radio section.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::analytic::DEFAULT_STATE_LIMIT;
use crate::error::{Error, Result};
use crate::metrics::{MetricsConfig, DEFAULT_GRID_MS};
use crate::model::{LossModel, Policy, Priority, TrafficClass};
use crate::numerology::{block_size_khz, lookup_numerology, RadioConfig};
use crate::sim::{InjectionMode, InjectionSchedule, Sampling, Scenario, Warmup};

pub const DEFAULT_REPLICATIONS: u32 = 30;

/// A rate in events per second, as written in the file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    text: Option<(f64, f64)>,
}

impl Rate {
    pub fn new(value: f64) -> Self {
        Rate { value, text: None }
    }

    pub fn ratio(num: f64, den: f64) -> Self {
        Rate {
            value: num / den,
            text: Some((num, den)),
        }
    }
}

impl std::str::FromStr for Rate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("cannot read rate {s:?}; expected a number or \"a/b\"");
        match s.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| bad())?;
                let b: f64 = b.trim().parse().map_err(|_| bad())?;
                if b == 0.0 {
                    return Err(format!("rate {s:?} divides by zero"));
                }
                Ok(Rate::ratio(a, b))
            }
            None => s.trim().parse().map(Rate::new).map_err(|_| bad()),
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.text {
            Some((a, b)) => s.serialize_str(&format!("{a}/{b}")),
            None => s.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RateVisitor;
        impl Visitor<'_> for RateVisitor {
            type Value = Rate;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an \"a/b\" string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Rate, E> {
                Ok(Rate::new(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rate, E> {
                Ok(Rate::new(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rate, E> {
                Ok(Rate::new(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rate, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(RateVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub channel_bandwidth_khz: Option<u32>,
    pub numerology: Option<u8>,
    pub num_prbs: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard_overhead_khz: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSection {
    pub name: Option<String>,
    pub arrival_rate: Option<Rate>,
    pub service_rate: Option<Rate>,
    pub demand_khz: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sessions: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<Priority>,
    /// Numerology whose PRB the demand is counted in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerology: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downgraded_demand_khz: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downgraded_service_rate: Option<Rate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSection {
    pub mode: Option<InjectionMode>,
    pub t_inject_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson_rate: Option<Rate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_rate: Option<Rate>,
    /// Class name; defaults to the high-priority class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
}

/// The file as written. Every key is optional at the parser level so that
/// missing keys are reported by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    pub policy: Option<Policy>,
    pub horizon_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<Warmup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_at_injected_cap: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rv_whole_window: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_limit: Option<usize>,
    pub radio: Option<RadioSection>,
    #[serde(default)]
    pub classes: Vec<ClassSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionSection>,
}

/// Command-line overrides applied on top of a file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub replications: Option<u32>,
    pub base_seed: Option<u64>,
    pub grid_ms: Option<f64>,
}

/// A validated scenario together with everything needed to report on it.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub metrics: MetricsConfig,
    pub state_limit: usize,
    pub time_scale: f64,
    /// Hex SHA-256 of the canonical JSON form of the file after overrides.
    pub hash: String,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    load_scenario_with(path, &Overrides::default())
}

pub fn load_scenario_with(path: impl AsRef<Path>, overrides: &Overrides) -> Result<LoadedScenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let file = parse_scenario_file(&text, path)?;
    resolve(file, overrides)
}

pub fn parse_scenario_file(text: &str, path: &Path) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })
}

fn missing(key: &str) -> Error {
    Error::Validation(format!("missing key {key}"))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Validation(format!(
            "{key} must be finite and positive"
        )))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::Validation(format!(
            "{key} must be finite and non-negative"
        )))
    }
}

/// Validates a parsed file and builds the scenario.
pub fn resolve(mut file: ScenarioFile, overrides: &Overrides) -> Result<LoadedScenario> {
    if let Some(r) = overrides.replications {
        file.replications = Some(r);
    }
    if let Some(s) = overrides.base_seed {
        file.base_seed = Some(s);
    }
    if let Some(g) = overrides.grid_ms {
        file.grid_ms = Some(g);
    }

    let label = file.label.clone().ok_or_else(|| missing("label"))?;
    let policy = file.policy.ok_or_else(|| missing("policy"))?;
    let horizon_ms = positive(
        "horizon_ms",
        file.horizon_ms.ok_or_else(|| missing("horizon_ms"))?,
    )?;
    let time_scale = positive("time_scale", file.time_scale.unwrap_or(1.0))?;
    let grid_ms = positive("grid_ms", file.grid_ms.unwrap_or(DEFAULT_GRID_MS))?;
    let radio = file.radio.as_ref().ok_or_else(|| missing("radio"))?;
    if file.classes.is_empty() {
        return Err(missing("classes"));
    }

    let mut names = Vec::new();
    let mut demands = Vec::new();
    for (i, c) in file.classes.iter().enumerate() {
        let name = c
            .name
            .clone()
            .ok_or_else(|| missing(&format!("classes[{i}].name")))?;
        if names.contains(&name) {
            return Err(Error::Validation(format!("duplicate class name {name}")));
        }
        let d = c
            .demand_khz
            .ok_or_else(|| missing(&format!("classes.{name}.demand_khz")))?;
        if d == 0 {
            return Err(Error::Validation(format!(
                "class {name}: demand_khz must be positive"
            )));
        }
        if let Some(beta) = c.numerology {
            let prb = lookup_numerology(beta)
                .map_err(|e| Error::Validation(format!("class {name}: {e}")))?
                .prb_khz;
            if d % prb != 0 {
                return Err(Error::Validation(format!(
                    "class {name}: demand {d} kHz is not a whole number of {prb} kHz PRBs of numerology {beta}"
                )));
            }
        }
        demands.push(d);
        match (c.adaptive.unwrap_or(false), c.downgraded_demand_khz) {
            (true, Some(dd)) => {
                if dd == 0 || dd >= d {
                    return Err(Error::Validation(format!(
                        "class {name}: downgraded demand must be smaller than the full-rate demand and positive"
                    )));
                }
                demands.push(dd);
            }
            (true, None) => return Err(missing(&format!("classes.{name}.downgraded_demand_khz"))),
            (false, Some(_)) | (false, None) if c.downgraded_service_rate.is_some() => {
                return Err(Error::Validation(format!(
                    "class {name}: downgraded_service_rate needs adaptive = true"
                )))
            }
            (false, Some(_)) => {
                return Err(Error::Validation(format!(
                    "class {name}: downgraded_demand_khz needs adaptive = true"
                )))
            }
            (false, None) => {}
        }
        names.push(name);
    }

    let block = block_size_khz(demands.iter().copied()).expect("demands are positive");
    let numerology = lookup_numerology(
        radio
            .numerology
            .ok_or_else(|| missing("radio.numerology"))?,
    )
    .map_err(|e| Error::Validation(e.to_string()))?;
    let rc = RadioConfig::with_overhead(
        radio
            .channel_bandwidth_khz
            .ok_or_else(|| missing("radio.channel_bandwidth_khz"))?,
        &numerology,
        radio.num_prbs.ok_or_else(|| missing("radio.num_prbs"))?,
        block,
        radio.guard_overhead_khz.unwrap_or(0),
    )?;
    let capacity = rc.capacity_blocks;

    let mut classes = Vec::with_capacity(file.classes.len());
    for (c, name) in file.classes.iter().zip(&names) {
        let key = |k: &str| format!("classes.{name}.{k}");
        let lambda = c
            .arrival_rate
            .ok_or_else(|| missing(&key("arrival_rate")))?;
        let mu = c
            .service_rate
            .ok_or_else(|| missing(&key("service_rate")))?;
        let lambda = non_negative(&key("arrival_rate"), lambda.value)? * time_scale;
        let mu = positive(&key("service_rate"), mu.value)? * time_scale;
        let delta = rc.blocks(c.demand_khz.expect("checked above"))?;
        let cap = c.max_sessions.unwrap_or(capacity / delta);
        if cap == 0 {
            return Err(Error::Validation(format!(
                "class {name}: max_sessions must be positive"
            )));
        }
        let mut tc = TrafficClass::new(name.clone(), lambda, mu, delta, cap)
            .with_priority(c.priority.unwrap_or_default());
        if let Some(dd) = c.downgraded_demand_khz {
            tc = tc.adaptive(rc.blocks(dd)?);
            if let Some(r) = c.downgraded_service_rate {
                let r = positive(&key("downgraded_service_rate"), r.value)? * time_scale;
                tc = tc.with_downgraded_service_rate(r);
            }
        }
        classes.push(tc);
    }

    let model = LossModel::new(policy, classes, capacity).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Validation(m),
        other => other,
    })?;

    let injection = match &file.injection {
        None => None,
        Some(inj) => {
            let class = match &inj.class {
                Some(n) => names.iter().position(|x| x == n).ok_or_else(|| {
                    Error::Validation(format!("injection class {n} is not defined"))
                })?,
                None => model
                    .high_priority_class()
                    .ok_or_else(|| missing("injection.class"))?,
            };
            let rate = |k: &str, r: Option<Rate>| -> Result<f64> {
                Ok(non_negative(k, r.map_or(0.0, |r| r.value))? * time_scale)
            };
            Some(InjectionSchedule {
                mode: inj.mode.ok_or_else(|| missing("injection.mode"))?,
                t_inject_ms: inj
                    .t_inject_ms
                    .ok_or_else(|| missing("injection.t_inject_ms"))?,
                batch_size: inj.batch_size.unwrap_or(0),
                poisson_rate: rate("injection.poisson_rate", inj.poisson_rate)?,
                retry_rate: rate("injection.retry_rate", inj.retry_rate)?,
                class,
            })
        }
    };

    let scenario = Scenario {
        label,
        model,
        radio: Some(rc),
        injection,
        horizon_ms,
        warmup: file.warmup.unwrap_or_default(),
        replications: file.replications.unwrap_or(DEFAULT_REPLICATIONS),
        base_seed: file.base_seed.unwrap_or(0),
        stop_at_injected_cap: file.stop_at_injected_cap.unwrap_or(false),
        sampling: file.sampling.unwrap_or_default(),
    };
    scenario.validate()?;

    let hash = scenario_hash(&file)?;
    Ok(LoadedScenario {
        metrics: MetricsConfig {
            grid_ms,
            rv_whole_window: file.rv_whole_window.unwrap_or(false),
        },
        state_limit: file.state_limit.unwrap_or(DEFAULT_STATE_LIMIT),
        time_scale,
        hash,
        scenario,
        file,
    })
}

/// SHA-256 over the canonical JSON form of the file.
pub fn scenario_hash(file: &ScenarioFile) -> Result<String> {
    let json = serde_json::to_vec(file)?;
    Ok(hex::encode(Sha256::digest(&json)))
}
