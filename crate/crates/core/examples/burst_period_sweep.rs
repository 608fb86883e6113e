//! Mean burst period against batch size, per policy and video load.
//!
//! ```text
//! cargo run --release --example burst_period_sweep
//! ```

use std::path::Path;

use nrslice::metrics::{aggregate, summarize};
use nrslice::scenario::load_scenario;
use nrslice::sim::run_experiment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let sizes = [10, 20, 30, 40, 50, 60];
    print!("{:<18}", "scenario");
    for s in sizes {
        print!("{s:>9}");
    }
    println!();
    for policy in ["nc1", "nc2", "nc3"] {
        for lam in [10, 20, 40] {
            let loaded = load_scenario(dir.join(format!("table2_{policy}_lam{lam}.toml")))?;
            print!("{:<18}", format!("{policy} 1/{lam}"));
            for s in sizes {
                let mut sc = loaded.scenario.clone();
                sc.injection
                    .as_mut()
                    .expect("bundled files inject")
                    .batch_size = s;
                let reps: Vec<_> = run_experiment(&sc)?
                    .iter()
                    .map(|t| summarize(t, &sc, &loaded.metrics))
                    .collect();
                let tg = aggregate(&reps)?
                    .burst_period_ms
                    .map_or(f64::NAN, |s| s.mean);
                print!("{tg:>9.1}");
            }
            println!();
        }
    }
    Ok(())
}
