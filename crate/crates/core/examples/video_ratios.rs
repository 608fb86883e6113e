//! Reject, downgrade and discard ratios of the video class for every
//! bundled scenario.

use std::path::Path;

use nrslice::metrics::{aggregate, summarize, Stat};
use nrslice::scenario::load_scenario;
use nrslice::sim::run_experiment;

fn mean(s: Option<Stat>) -> f64 {
    s.map_or(f64::NAN, |s| s.mean)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    println!(
        "{:<20}{:>8}{:>8}{:>8}{:>8}{:>8}",
        "scenario", "r_rj", "r_dw", "r_dc", "r_v", "n_ga"
    );
    for policy in ["nc1", "nc2", "nc3"] {
        for lam in [10, 20, 40] {
            let loaded = load_scenario(dir.join(format!("table2_{policy}_lam{lam}.toml")))?;
            let sc = &loaded.scenario;
            let reps: Vec<_> = run_experiment(sc)?
                .iter()
                .map(|t| summarize(t, sc, &loaded.metrics))
                .collect();
            let a = aggregate(&reps)?;
            println!(
                "{:<20}{:>8.4}{:>8.4}{:>8.4}{:>8.4}{:>8.1}",
                sc.label,
                mean(a.r_rj),
                mean(a.r_dw),
                mean(a.r_dc),
                mean(a.r_v),
                mean(a.n_ga)
            );
        }
    }
    Ok(())
}
