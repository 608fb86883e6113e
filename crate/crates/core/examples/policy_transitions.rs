//! Outgoing transitions of a few boundary states under each admission
//! policy.

use nrslice::model::{LossModel, Policy, Priority, TrafficClass};

fn show(model: &LossModel, state: &[u32]) {
    println!("{} {:?}", model.policy(), state);
    for t in model.transitions(state) {
        println!(
            "    {:<20} class {} -> {} rate {:.4} (downgraded {}, discarded {})",
            t.kind.as_str(),
            t.class,
            t.target,
            t.rate,
            t.downgraded,
            t.discarded
        );
    }
}

fn main() -> nrslice::error::Result<()> {
    let goose = TrafficClass::new("goose", 1.0, 1.0 / 60.0, 1, 62);
    let video = TrafficClass::new("video", 1.0 / 20.0, 1.0 / 600.0, 2, 31);

    let nc1 = LossModel::new(Policy::Nc1, vec![goose.clone(), video.clone()], 62)?;
    show(&nc1, &[61, 0]);

    let high = goose.with_priority(Priority::High);
    let low = video.with_priority(Priority::Low);
    let nc2 = LossModel::new(Policy::Nc2, vec![high.clone(), low.clone()], 62)?;
    show(&nc2, &[0, 31]);
    show(&nc2, &[62, 0]);

    let nc3 = LossModel::new(Policy::Nc3, vec![high, low.adaptive(1)], 62)?;
    show(&nc3, &[0, 31, 0]);
    show(&nc3, &[1, 30, 1]);
    Ok(())
}
