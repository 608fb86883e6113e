//! One replication of a burst injection under adaptive downgrade, printed
//! around the injection instant.

use nrslice::model::{LossModel, Policy, Priority, TrafficClass};
use nrslice::sim::{replication_seed, run_replication, InjectionSchedule, Scenario};

fn main() -> nrslice::error::Result<()> {
    let k = 1000.0;
    let model = LossModel::new(
        Policy::Nc3,
        vec![
            TrafficClass::new("goose", k, k / 60.0, 1, 62).with_priority(Priority::High),
            TrafficClass::new("video", k / 20.0, k / 600.0, 2, 31)
                .with_priority(Priority::Low)
                .adaptive(1),
        ],
        62,
    )?;
    let mut scenario = Scenario::new("burst", model, 6000.0);
    let mut injection = InjectionSchedule::batch(2000.0, 40);
    injection.retry_rate = k;
    scenario.injection = Some(injection);

    let t = run_replication(&scenario, replication_seed(1, 0))?;
    println!("{} events", t.events.len());
    for e in t
        .events
        .iter()
        .filter(|e| (1990.0..2100.0).contains(&e.t_ms))
        .take(60)
    {
        println!(
            "{:>9.3} ms  {:<20} {:<9?} -> {}  (dg {}, dc {})",
            e.t_ms,
            e.kind.as_str(),
            e.origin,
            e.state,
            e.downgraded,
            e.discarded
        );
    }
    for at in [1999.0, 2000.0, 2500.0, 3000.0, 6000.0] {
        println!("state at {at} ms: {}", t.state_at(at));
    }
    Ok(())
}
