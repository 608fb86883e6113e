//! Runs the nine bundled reference scenarios and prints one line of key
//! metrics per scenario.
//!
//! ```text
//! cargo run --release --example scenario_set [batch_size]
//! ```

use std::path::Path;

use nrslice::metrics::{aggregate, summarize, Stat};
use nrslice::scenario::load_scenario;
use nrslice::sim::run_experiment;

fn show(s: Option<Stat>) -> String {
    match s {
        Some(s) => {
            let (lo, hi) = s.confidence_interval(0.95);
            format!("{:>9.4} [{:.4}, {:.4}]", s.mean, lo, hi)
        }
        None => format!("{:>9}", "-"),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let batch: Option<u32> = std::env::args().nth(1).map(|a| a.parse()).transpose()?;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for policy in ["nc1", "nc2", "nc3"] {
        for lam in [10, 20, 40] {
            let mut loaded = load_scenario(dir.join(format!("table2_{policy}_lam{lam}.toml")))?;
            if let (Some(b), Some(inj)) = (batch, loaded.scenario.injection.as_mut()) {
                inj.batch_size = b;
            }
            let sc = &loaded.scenario;
            let reps: Vec<_> = run_experiment(sc)?
                .iter()
                .map(|t| summarize(t, sc, &loaded.metrics))
                .collect();
            let a = aggregate(&reps)?;
            println!("{}", sc.label);
            println!("  rho_avg  {}", show(a.rho_avg));
            println!("  T_g ms   {}", show(a.burst_period_ms));
            println!("  r_rj     {}", show(a.r_rj));
            println!("  r_dw     {}", show(a.r_dw));
            println!("  r_dc     {}", show(a.r_dc));
            println!("  r_v      {}", show(a.r_v));
            println!("  n_ga     {}", show(a.n_ga));
        }
    }
    Ok(())
}
