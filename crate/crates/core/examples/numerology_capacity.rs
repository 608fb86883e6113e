//! NR numerology table, guard bands and the capacity of a shared pool.

use nrslice::numerology::{
    block_size_khz, guard_band_khz, lookup_numerology, select_numerology, CarrierBand, CellSize,
    Mobility, RadioConfig, SelectionContext, MAX_BETA,
};

fn main() -> nrslice::error::Result<()> {
    println!("beta  scs_khz  prb_khz  slots  symbol_us  cp_us");
    for beta in 0..=MAX_BETA {
        let n = lookup_numerology(beta)?;
        println!(
            "{:>4}  {:>7}  {:>7}  {:>5}  {:>9}  {:>5}",
            n.beta,
            n.scs_khz,
            n.prb_khz,
            n.slots_per_subframe,
            n.symbol_duration_us,
            n.cp_duration_us
        );
    }

    // 31 PRBs of 60 kHz SCS in a 25 MHz channel
    let num = lookup_numerology(2)?;
    println!(
        "\nguard band: {} kHz per side",
        guard_band_khz(25_000, num.scs_khz, 31)?
    );
    let block = block_size_khz([360, 720, 360]).expect("non-empty");
    let radio = RadioConfig::new(25_000, &num, 31, block)?;
    println!(
        "usable {} kHz = {} blocks of {} kHz",
        radio.usable_capacity_khz, radio.capacity_blocks, radio.block_khz
    );
    println!(
        "video needs {} blocks, goose {}",
        radio.blocks(720)?,
        radio.blocks(360)?
    );
    if let Err(e) = RadioConfig::new(25_000, &num, 35, block) {
        println!("35 PRBs: {e}");
    }

    let urllc = SelectionContext {
        latency_critical: true,
        carrier_band: CarrierBand::MmWave,
        cell_size: CellSize::Small,
        mobility: Mobility::High,
        narrowband_device: false,
    };
    let iot = SelectionContext {
        latency_critical: false,
        carrier_band: CarrierBand::Sub6,
        cell_size: CellSize::Large,
        mobility: Mobility::Low,
        narrowband_device: true,
    };
    println!("\nurllc on mmWave: {:?}", select_numerology(&urllc));
    println!(
        "narrowband in a large sub-6 cell: {:?}",
        select_numerology(&iot)
    );
    Ok(())
}
