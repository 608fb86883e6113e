mod common;

use common::{check_policy_invariants, feasible_states, table2};
use nrslice::model::{LossModel, Policy, Priority, TrafficClass, TransitionKind};
use proptest::prelude::*;

#[test]
fn nc2_every_state_at_reference_size() {
    let n = check_policy_invariants(&table2(Policy::Nc2, 0.05)).unwrap();
    assert_eq!(n, (0..=31u32).map(|v| 62 - 2 * v + 1).sum::<u32>() as usize);
}

#[test]
fn nc3_every_state_at_reference_size() {
    let n = check_policy_invariants(&table2(Policy::Nc3, 0.05)).unwrap();
    assert!(n > 20_000);
}

#[test]
fn nc1_and_nc2_agree_where_goose_fits() {
    let nc1 = table2(Policy::Nc1, 0.05);
    let nc2 = table2(Policy::Nc2, 0.05);
    for s in feasible_states(&nc1) {
        if !nc1.admissible(&s, 0) {
            continue;
        }
        let a = nc1.transitions(&s);
        let b = nc2.transitions(&s);
        assert_eq!(a.len(), b.len(), "{s:?}");
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (x.kind, &x.target, x.rate),
                (y.kind, &y.target, y.rate),
                "{s:?}"
            );
        }
    }
}

#[test]
fn outgoing_rate_is_arrivals_plus_departures() {
    for policy in [Policy::Nc1, Policy::Nc2, Policy::Nc3] {
        let m = table2(policy, 0.1);
        for s in feasible_states(&m).iter().step_by(7) {
            let ts = m.transitions(s);
            let out: f64 = ts
                .iter()
                .filter(|t| t.kind != TransitionKind::ArrivalRejected)
                .map(|t| t.rate)
                .sum();
            let arrivals: f64 = ts
                .iter()
                .filter(|t| t.kind.is_arrival() && t.kind != TransitionKind::ArrivalRejected)
                .map(|t| t.rate)
                .sum();
            let departures: f64 = s
                .iter()
                .zip(m.dims())
                .map(|(&n, d)| f64::from(n) * d.service_rate)
                .sum();
            assert!(
                (out - arrivals - departures).abs() < 1e-12,
                "{policy} {s:?}"
            );
            assert!((m.departure_rate(s) - departures).abs() < 1e-12);
        }
    }
}

#[test]
fn no_downgrade_arcs_without_adaptation() {
    for policy in [Policy::Nc1, Policy::Nc2] {
        let m = table2(policy, 0.1);
        for s in feasible_states(&m) {
            for t in m.transitions(&s) {
                assert_eq!(t.downgraded, 0);
                assert!(!matches!(
                    t.kind,
                    TransitionKind::DowngradeCascade | TransitionKind::ArrivalDowngraded
                ));
            }
        }
    }
}

fn priority_model(
    policy: Policy,
    capacity: u32,
    d_hi: u32,
    d_lo: u32,
    d_down: u32,
    s_hi: u32,
    s_lo: u32,
) -> Option<LossModel> {
    let hi = TrafficClass::new("hi", 1.0, 1.0, d_hi, s_hi).with_priority(Priority::High);
    let mut lo = TrafficClass::new("lo", 1.0, 0.5, d_lo, s_lo).with_priority(Priority::Low);
    if policy == Policy::Nc3 {
        if d_down >= d_lo {
            return None;
        }
        lo = lo.adaptive(d_down);
    }
    LossModel::new(policy, vec![hi, lo], capacity).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn priority_invariants_on_random_models(
        nc3 in any::<bool>(),
        capacity in 1u32..=16,
        d_hi in 1u32..=5,
        d_lo in 1u32..=5,
        d_down in 1u32..=4,
        s_hi in 1u32..=16,
        s_lo in 1u32..=16,
    ) {
        let policy = if nc3 { Policy::Nc3 } else { Policy::Nc2 };
        if let Some(m) = priority_model(policy, capacity, d_hi, d_lo, d_down, s_hi, s_lo) {
            prop_assert!(check_policy_invariants(&m).is_ok(), "{:?}", check_policy_invariants(&m));
        }
    }
}
