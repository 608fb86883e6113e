//! Stationary blocking of complete sharing: the Kaufman-Roberts recursion
//! against the exact generator-matrix solution.

use nrslice::analytic::{
    blocking_probabilities, build_generator, kaufman_roberts, kaufman_roberts_loads,
    occupancy_distribution, steady_state, DEFAULT_STATE_LIMIT,
};
use nrslice::model::{LossModel, Policy, TrafficClass};

fn main() -> nrslice::error::Result<()> {
    // full-rate video alone: 31 slots of 2 blocks
    for lam in [10.0, 20.0, 40.0] {
        let a = 600.0 / lam;
        let b = kaufman_roberts_loads(&[(a, 2)], 62).blocking[0];
        println!("lambda_2 = 1/{lam}: a = {a} erlangs, blocking {b:.5}");
    }

    let classes = vec![
        TrafficClass::new("narrow", 2.0, 1.0, 1, 10),
        TrafficClass::new("wide", 3.0, 1.0, 2, 5),
    ];
    let kr = kaufman_roberts(&classes, 10)?;
    let model = LossModel::new(Policy::Nc1, classes, 10)?;
    let (space, q) = build_generator(&model, DEFAULT_STATE_LIMIT)?;
    let pi = steady_state(&q)?;
    let exact = blocking_probabilities(&model, &space, &pi);
    let occ = occupancy_distribution(&model, &space, &pi);
    println!("\n{} states", space.len());
    for (i, c) in model.classes().iter().enumerate() {
        println!(
            "{:<7} recursion {:.10}  generator {:.10}",
            c.name, kr.blocking[i], exact[i]
        );
    }
    let gap = kr
        .occupancy
        .q
        .iter()
        .zip(&occ)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("largest occupancy difference {gap:.2e}");
    Ok(())
}
