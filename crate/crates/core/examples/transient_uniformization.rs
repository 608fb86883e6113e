//! Transient state probabilities by uniformization, starting empty, and
//! their convergence to the steady state.

use nrslice::analytic::{build_generator, steady_state, transient, DEFAULT_STATE_LIMIT};
use nrslice::model::{LossModel, Policy, TrafficClass};

fn main() -> nrslice::error::Result<()> {
    let model = LossModel::new(
        Policy::Nc1,
        vec![
            TrafficClass::new("narrow", 1.0, 1.0, 1, 4),
            TrafficClass::new("wide", 1.0, 0.5, 2, 2),
        ],
        4,
    )?;
    let (space, q) = build_generator(&model, DEFAULT_STATE_LIMIT)?;
    let pi0 = space.point_mass(&[0, 0]).expect("empty state is reachable");
    let pi = steady_state(&q)?;

    print!("{:>6}", "t");
    for s in space.states() {
        print!("{:>8}", s.to_string());
    }
    println!("{:>10}", "distance");
    for t in [0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0] {
        let p = transient(&q, &pi0, t);
        print!("{t:>6}");
        for v in &p {
            print!("{v:>8.4}");
        }
        let d: f64 = p.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        println!("{d:>10.2e}");
    }
    Ok(())
}
