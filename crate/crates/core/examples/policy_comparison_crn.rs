//! Discard ratios of preemption against adaptive downgrade, replication by
//! replication, with both policies fed the same arrival streams.

use std::path::Path;

use nrslice::metrics::summarize;
use nrslice::scenario::load_scenario;
use nrslice::sim::{run_experiment, Sampling};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for lam in [10, 20, 40] {
        let mut runs = Vec::new();
        for policy in ["nc2", "nc3"] {
            let mut loaded = load_scenario(dir.join(format!("table2_{policy}_lam{lam}.toml")))?;
            loaded.scenario.sampling = Sampling::CommonArrivals;
            let sc = &loaded.scenario;
            let reps: Vec<_> = run_experiment(sc)?
                .iter()
                .map(|t| summarize(t, sc, &loaded.metrics))
                .collect();
            runs.push(reps);
        }
        let pairs: Vec<(f64, f64)> = runs[0]
            .iter()
            .zip(&runs[1])
            .map(|(a, b)| (a.r_dc.unwrap_or(0.0), b.r_dc.unwrap_or(0.0)))
            .collect();
        let wins = pairs.iter().filter(|(nc2, nc3)| nc3 <= nc2).count();
        let diff: f64 = pairs.iter().map(|(a, b)| a - b).sum::<f64>() / pairs.len() as f64;
        println!(
            "lambda_2 = 1/{lam}: r_dc(nc3) <= r_dc(nc2) in {wins}/{} replications, mean gap {diff:.4}",
            pairs.len()
        );
    }
    Ok(())
}
