//! 5G NR numerologies, guard bands and the capacity of the shared PRB pool.
//!
//! Capacity is expressed in integer allocation units ("blocks"). A block is
//! the greatest common divisor of all per-session demands of a scenario, so
//! admission checks never compare floating-point bandwidths.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sub-carriers per physical resource block.
pub const SUBCARRIERS_PER_PRB: u32 = 12;

/// Highest numerology index defined by NR.
pub const MAX_BETA: u8 = 4;

/// One row of the NR numerology table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Numerology {
    pub beta: u8,
    pub scs_khz: u32,
    pub prb_khz: u32,
    pub slots_per_subframe: u32,
    pub symbol_duration_us: f64,
    pub cp_duration_us: f64,
}

// (symbol duration, normal CP duration) in microseconds, indexed by beta.
const DURATIONS_US: [(f64, f64); 5] = [
    (71.43, 4.69),
    (35.71, 2.34),
    (17.86, 1.17),
    (8.92, 0.57),
    (4.46, 0.29),
];

/// Returns the table row for `beta`.
pub fn lookup_numerology(beta: u8) -> Result<Numerology> {
    if beta > MAX_BETA {
        return Err(Error::InvalidArgument(format!(
            "numerology index {beta} outside 0..={MAX_BETA}"
        )));
    }
    let scale = 1u32 << beta;
    let scs_khz = 15 * scale;
    let (symbol_duration_us, cp_duration_us) = DURATIONS_US[beta as usize];
    Ok(Numerology {
        beta,
        scs_khz,
        prb_khz: SUBCARRIERS_PER_PRB * scs_khz,
        slots_per_subframe: scale,
        symbol_duration_us,
        cp_duration_us,
    })
}

/// Minimum guard band on each side of the carrier, in kHz.
///
/// `(channel_bandwidth - num_prbs * scs * 12) / 2`; fails when the PRBs do
/// not fit in the channel.
pub fn guard_band_khz(channel_bandwidth_khz: u32, scs_khz: u32, num_prbs: u32) -> Result<f64> {
    let occupied = u64::from(num_prbs) * u64::from(scs_khz) * u64::from(SUBCARRIERS_PER_PRB);
    let channel = u64::from(channel_bandwidth_khz);
    if occupied > channel {
        return Err(Error::InfeasibleAllocation(format!(
            "{num_prbs} PRBs at {scs_khz} kHz SCS need {occupied} kHz, channel is {channel_bandwidth_khz} kHz"
        )));
    }
    Ok((channel - occupied) as f64 / 2.0)
}

/// Channel layout and the resulting capacity `C` of the shared pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub channel_bandwidth_khz: u32,
    /// Numerology the capacity PRBs are counted in.
    pub beta: u8,
    pub num_prbs: u32,
    pub guard_band_khz: f64,
    /// Fixed overhead removed for guard periods between multiplexed
    /// numerologies. Zero unless configured.
    pub guard_overhead_khz: u32,
    pub block_khz: u32,
    pub usable_capacity_khz: u32,
    pub capacity_blocks: u32,
}

impl RadioConfig {
    /// Derives the usable capacity of `num_prbs` PRBs of `numerology` inside
    /// the channel, counted in allocation units of `block_khz`.
    pub fn new(
        channel_bandwidth_khz: u32,
        numerology: &Numerology,
        num_prbs: u32,
        block_khz: u32,
    ) -> Result<Self> {
        Self::with_overhead(channel_bandwidth_khz, numerology, num_prbs, block_khz, 0)
    }

    pub fn with_overhead(
        channel_bandwidth_khz: u32,
        numerology: &Numerology,
        num_prbs: u32,
        block_khz: u32,
        guard_overhead_khz: u32,
    ) -> Result<Self> {
        if block_khz == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        let guard = guard_band_khz(channel_bandwidth_khz, numerology.scs_khz, num_prbs)?;
        let gross = num_prbs * numerology.prb_khz;
        let usable = gross.checked_sub(guard_overhead_khz).ok_or_else(|| {
            Error::InfeasibleAllocation(format!(
                "guard overhead {guard_overhead_khz} kHz exceeds allocated {gross} kHz"
            ))
        })?;
        if usable % block_khz != 0 {
            return Err(Error::InfeasibleAllocation(format!(
                "usable capacity {usable} kHz is not a multiple of the {block_khz} kHz block"
            )));
        }
        Ok(RadioConfig {
            channel_bandwidth_khz,
            beta: numerology.beta,
            num_prbs,
            guard_band_khz: guard,
            guard_overhead_khz,
            block_khz,
            usable_capacity_khz: usable,
            capacity_blocks: usable / block_khz,
        })
    }

    /// Converts a demand in kHz to whole blocks.
    pub fn blocks(&self, demand_khz: u32) -> Result<u32> {
        if demand_khz == 0 || !demand_khz.is_multiple_of(self.block_khz) {
            return Err(Error::InvalidArgument(format!(
                "demand {demand_khz} kHz is not a positive multiple of the {} kHz block",
                self.block_khz
            )));
        }
        Ok(demand_khz / self.block_khz)
    }
}

/// Usable capacity of `num_prbs` PRBs with the allocation unit left at one
/// PRB of the given numerology.
pub fn usable_capacity(
    channel_bandwidth_khz: u32,
    numerology: &Numerology,
    num_prbs: u32,
) -> Result<RadioConfig> {
    RadioConfig::new(
        channel_bandwidth_khz,
        numerology,
        num_prbs,
        numerology.prb_khz,
    )
}

/// Greatest common divisor of the given demands; the natural block size.
pub fn block_size_khz(demands_khz: impl IntoIterator<Item = u32>) -> Option<u32> {
    demands_khz.into_iter().filter(|&d| d > 0).reduce(gcd)
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierBand {
    Sub6,
    MmWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellSize {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mobility {
    Low,
    High,
}

/// Deployment and service facts that drive numerology choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionContext {
    pub latency_critical: bool,
    pub carrier_band: CarrierBand,
    pub cell_size: CellSize,
    pub mobility: Mobility,
    pub narrowband_device: bool,
}

/// Recommends numerologies for a deployment.
///
/// The band fixes the admissible range (sub-6: 0..=2, mmWave: 2..=4).
/// Latency-critical service, mmWave phase noise and high Doppler spread each
/// require a wider SCS than the band minimum; large cells (delay spread) cap
/// the index at one above the band minimum and narrowband devices pin it to
/// the minimum. When the upward and downward requirements cannot both be met,
/// the upward (latency / phase noise) set is returned.
pub fn select_numerology(ctx: &SelectionContext) -> BTreeSet<u8> {
    let band: BTreeSet<u8> = match ctx.carrier_band {
        CarrierBand::Sub6 => (0..=2).collect(),
        CarrierBand::MmWave => (2..=MAX_BETA).collect(),
    };
    let band_min = *band.first().expect("band is never empty");

    let wants_wide = ctx.latency_critical
        || ctx.carrier_band == CarrierBand::MmWave
        || ctx.mobility == Mobility::High;
    let up: BTreeSet<u8> = if wants_wide {
        band.iter().copied().filter(|&b| b > band_min).collect()
    } else {
        band.clone()
    };

    let mut ceiling = MAX_BETA;
    if ctx.cell_size == CellSize::Large {
        ceiling = ceiling.min(band_min + 1);
    }
    if ctx.narrowband_device {
        ceiling = ceiling.min(band_min);
    }
    let both: BTreeSet<u8> = up.iter().copied().filter(|&b| b <= ceiling).collect();
    if both.is_empty() {
        up
    } else {
        both
    }
}
