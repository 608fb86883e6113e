mod common;

use approx::assert_abs_diff_eq;
use common::{erlang_b, feasible_states, table2};
use nrslice::analytic::{
    build_generator, feasible_state_count, kaufman_roberts, kaufman_roberts_loads,
    occupancy_distribution, steady_state, transient, GeneratorMatrix, StateSpace,
    DEFAULT_STATE_LIMIT,
};
use nrslice::error::Error;
use nrslice::model::{LossModel, Policy, TrafficClass};
use proptest::prelude::*;

fn nc1(classes: Vec<TrafficClass>, capacity: u32) -> LossModel {
    LossModel::new(Policy::Nc1, classes, capacity).unwrap()
}

#[test]
fn erlang_examples() {
    let r = kaufman_roberts_loads(&[(1.0, 1)], 2);
    assert_abs_diff_eq!(r.blocking[0], 0.2, epsilon = 1e-15);
    let b30 = kaufman_roberts_loads(&[(30.0, 1)], 31).blocking[0];
    assert_abs_diff_eq!(b30, erlang_b(30.0, 31), epsilon = 1e-12);
    assert!((b30 - 0.11).abs() <= 0.02, "{b30}");
    assert!(kaufman_roberts_loads(&[(15.0, 1)], 31).blocking[0] < 0.005);
}

#[test]
fn invalid_capacity() {
    let c = TrafficClass::new("v", 1.0, 1.0, 1, 5);
    assert!(matches!(
        kaufman_roberts(&[c], 0),
        Err(Error::InvalidArgument(_))
    ));
}

proptest! {
    #[test]
    fn single_class_is_erlang_b(capacity in 1u32..=100, a in 0.0f64..=100.0) {
        let kr = kaufman_roberts_loads(&[(a, 1)], capacity);
        prop_assert!((kr.blocking[0] - erlang_b(a, capacity)).abs() < 1e-12);
    }

    #[test]
    fn steady_state_matches_recursion(
        capacity in 2u32..=14,
        d2 in 1u32..=4,
        a1 in 0.1f64..8.0,
        a2 in 0.1f64..8.0,
    ) {
        let classes = vec![
            TrafficClass::new("a", a1, 1.0, 1, capacity),
            TrafficClass::new("b", a2 * 0.5, 0.5, d2, capacity / d2),
        ];
        let kr = kaufman_roberts(&classes, capacity).unwrap();
        let m = nc1(classes, capacity);
        let (space, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        let pi = steady_state(&q).unwrap();
        let occ = occupancy_distribution(&m, &space, &pi);
        for (x, y) in occ.iter().zip(&kr.occupancy.q) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn transient_is_a_distribution(t in 0.0f64..20.0) {
        let m = nc1(
            vec![TrafficClass::new("a", 1.5, 1.0, 1, 4), TrafficClass::new("b", 0.7, 0.4, 2, 2)],
            4,
        );
        let (space, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        let p = transient(&q, &space.point_mass(&[0, 0]).unwrap(), t);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn small_chains() {
    // M/M/1/1 with equal rates
    let m = nc1(vec![TrafficClass::new("a", 1.0, 1.0, 1, 1)], 1);
    let (_, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
    let pi = steady_state(&q).unwrap();
    assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(pi[1], 0.5, epsilon = 1e-12);

    // M/M/2/2 at one erlang
    let m = nc1(vec![TrafficClass::new("a", 1.0, 1.0, 1, 2)], 2);
    let (space, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
    assert_eq!(space.len(), 3);
    assert_eq!(q.get(0, 1), 1.0);
    assert_eq!(q.get(1, 0), 1.0);
    assert_eq!(q.get(2, 1), 2.0);
    let pi = steady_state(&q).unwrap();
    for (p, e) in pi.iter().zip([0.4, 0.4, 0.2]) {
        assert_abs_diff_eq!(*p, e, epsilon = 1e-12);
    }
}

#[test]
fn generator_rows_sum_to_zero() {
    for policy in [Policy::Nc1, Policy::Nc2, Policy::Nc3] {
        let m = table2(policy, 0.1);
        let (_, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        for i in 0..q.dim() {
            let off: f64 = q.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
            let total: f64 = q.row(i).map(|(_, v)| v).sum();
            assert!(q.row(i).all(|(j, v)| j == i || v >= 0.0));
            assert_eq!(q.get(i, i), q.diagonal()[i]);
            assert!(total.abs() < 1e-12 * off.max(1.0), "{policy} row {i}");
        }
    }
}

#[test]
fn nc2_full_video_row_has_preemption() {
    let m = table2(Policy::Nc2, 0.05);
    let (space, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
    let from = space.index_of(&[0, 31]).unwrap();
    let to = space.index_of(&[1, 30]).unwrap();
    assert_eq!(q.get(from, to), 1.0);
}

#[test]
fn nc3_state_count_matches_triple_loop() {
    let m = table2(Policy::Nc3, 0.05);
    let space = StateSpace::reachable(&m, DEFAULT_STATE_LIMIT).unwrap();
    let mut count = 0usize;
    for w1 in 0..=62u32 {
        for w2 in 0..=31u32 {
            for w3 in 0..=62u32 {
                if w1 + 2 * w2 + w3 <= 62 {
                    count += 1;
                }
            }
        }
    }
    assert_eq!(space.len(), count);
    assert_eq!(feasible_states(&m).len(), count);
    assert_eq!(feasible_state_count(&m), count as u128);
    assert!(space.states().iter().all(|s| m.occupied(s) <= 62));
}

#[test]
fn state_space_cap_reports_size() {
    let m = table2(Policy::Nc3, 0.05);
    match build_generator(&m, 1000) {
        Err(e @ Error::StateSpaceTooLarge { size, limit: 1000 }) => {
            assert!(size > 1000);
            assert_eq!(e.exit_code(), 4);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn pure_death_transient() {
    let mu = 0.7;
    let q = GeneratorMatrix::from_rates(2, [(1, 0, mu)]);
    for t in [0.0, 0.3, 1.0, 4.0] {
        let p = transient(&q, &[0.0, 1.0], t);
        assert_abs_diff_eq!(p[0], 1.0 - (-mu * t).exp(), epsilon = 1e-9);
    }
}

#[test]
fn two_state_closed_form() {
    let (l, m) = (2.0, 3.0);
    let q = GeneratorMatrix::from_rates(2, [(0, 1, l), (1, 0, m)]);
    let t = 1.0 / l;
    let p = transient(&q, &[1.0, 0.0], t);
    let p1 = l / (l + m) * (1.0 - (-(l + m) * t).exp());
    assert_abs_diff_eq!(p[1], p1, epsilon = 1e-8);
    assert_abs_diff_eq!(p[0], 1.0 - p1, epsilon = 1e-8);
    assert_eq!(transient(&q, &[0.25, 0.75], 0.0), vec![0.25, 0.75]);
}

#[test]
fn transient_reaches_steady_state() {
    let m = nc1(
        vec![
            TrafficClass::new("a", 1.0, 1.0, 1, 4),
            TrafficClass::new("b", 1.0, 0.5, 2, 2),
        ],
        4,
    );
    let (space, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
    let pi = steady_state(&q).unwrap();
    let t = 50.0 / 0.5;
    let p = transient(&q, &space.point_mass(&[0, 0]).unwrap(), t);
    let d: f64 = p.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn large_nc3_steady_state_is_balanced() {
    let m = table2(Policy::Nc3, 0.05);
    let (_, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
    let pi = steady_state(&q).unwrap();
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(q.residual(&pi) < 1e-10);
}
