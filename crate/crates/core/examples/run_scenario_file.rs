//! Loads a scenario file and writes the full output bundle, like the
//! command-line runner.
//!
//! ```text
//! cargo run --release --example run_scenario_file -- scenarios/table2_nc3_lam20.toml out/nc3
//! ```

use std::path::PathBuf;

use nrslice::report::{run, Mode, RunOptions};
use nrslice::scenario::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/table2_nc3_lam20.toml")
    });
    let out = args.next().unwrap_or_else(|| "out".into());

    let loaded = load_scenario(&path)?;
    println!("{} ({})", loaded.scenario.label, loaded.hash);
    let bundle = run(&loaded, &RunOptions::new(Mode::Both, out))?;
    if let Some(s) = &bundle.summary {
        if let Some(rho) = s.rho_avg {
            println!("rho_avg {:.4} (var {:.2e})", rho.mean, rho.variance);
        }
        if let Some(tg) = s.burst_period_ms {
            println!("burst period {:.1} ms (var {:.1})", tg.mean, tg.variance);
        }
    }
    if let Some(a) = &bundle.analytic {
        println!(
            "steady state over {} states, utilization {:.4}",
            a.states, a.utilization
        );
    }
    for f in &bundle.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
