use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Priority, TrafficClass};

/// Probability mass over occupied blocks `0..=C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyDistribution {
    pub q: Vec<f64>,
}

impl OccupancyDistribution {
    pub fn capacity(&self) -> u32 {
        (self.q.len() - 1) as u32
    }

    pub fn mean_occupied(&self) -> f64 {
        self.q.iter().enumerate().map(|(c, p)| c as f64 * p).sum()
    }

    /// Long-run fraction of the capacity in use.
    pub fn utilization(&self) -> f64 {
        self.mean_occupied() / f64::from(self.capacity())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KaufmanRoberts {
    pub occupancy: OccupancyDistribution,
    /// Per-class blocking probability, in class order.
    pub blocking: Vec<f64>,
}

/// Stationary occupancy and per-class blocking of a complete-sharing loss
/// system.
///
/// The recursion ignores per-class session caps, so every cap must be at
/// least `C / demand`; classes must carry no priority and no downgrade.
pub fn kaufman_roberts(classes: &[TrafficClass], capacity: u32) -> Result<KaufmanRoberts> {
    if capacity == 0 {
        return Err(Error::InvalidArgument("capacity must be positive".into()));
    }
    let mut loads = Vec::with_capacity(classes.len());
    for c in classes {
        if c.priority != Priority::None || c.downgrade.is_some() {
            return Err(Error::InvalidArgument(format!(
                "class {}: the recursion needs non-priority, non-adaptive classes",
                c.name
            )));
        }
        if c.demand_blocks == 0 {
            return Err(Error::InvalidArgument(format!(
                "class {}: demand must be at least one block",
                c.name
            )));
        }
        if c.max_sessions < capacity / c.demand_blocks {
            return Err(Error::InvalidArgument(format!(
                "class {}: session cap {} binds below capacity {} / demand {}",
                c.name, c.max_sessions, capacity, c.demand_blocks
            )));
        }
        let a = c.offered_load();
        if !a.is_finite() || a < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "class {}: offered load must be finite",
                c.name
            )));
        }
        loads.push((a, c.demand_blocks));
    }
    Ok(kaufman_roberts_loads(&loads, capacity))
}

/// The recursion on raw `(offered load, demand)` pairs.
///
/// `c q(c) = sum_i a_i d_i q(c - d_i)`, normalised; class `i` is blocked in
/// every state with more than `C - d_i` blocks in use.
pub fn kaufman_roberts_loads(loads: &[(f64, u32)], capacity: u32) -> KaufmanRoberts {
    let cap = capacity as usize;
    let mut q = vec![0.0f64; cap + 1];
    q[0] = 1.0;
    for c in 1..=cap {
        let mut acc = 0.0;
        for &(a, d) in loads {
            let d = d as usize;
            if d <= c {
                acc += a * d as f64 * q[c - d];
            }
        }
        q[c] = acc / c as f64;
        // keep the unnormalised values representable
        if q[c] > 1e250 {
            for v in &mut q[..=c] {
                *v *= 1e-250;
            }
        }
    }
    let total: f64 = q.iter().sum();
    for v in &mut q {
        *v /= total;
    }
    let blocking = loads
        .iter()
        .map(|&(_, d)| {
            let first_blocked = (cap + 1).saturating_sub(d as usize);
            q[first_blocked..].iter().sum()
        })
        .collect();
    KaufmanRoberts {
        occupancy: OccupancyDistribution { q },
        blocking,
    }
}
