mod common;

use common::{random_graph, random_policy};
use gradpush::schedule::{generate_schedule, verify_bounds, Schedule, SchedulePolicy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(seed: u64, n: usize, horizon: usize) -> (gradpush::topology::ReferenceGraph, Schedule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(&mut rng, n, 0.25);
    let policy = random_policy(&mut rng, n);
    let tp = rng.random_range(1..=5);
    let mut tm = rng.random_range(0..=3);
    if matches!(policy, SchedulePolicy::RateRatio(_)) {
        tm = tm.max(tp - 1);
    }
    let s = generate_schedule(&g, horizon, tp, tm, &policy, seed).unwrap();
    (g, s)
}

proptest! {
    #[test]
    fn generated_schedules_respect_their_bounds(seed in any::<u64>(), n in 1usize..8, horizon in 1usize..120) {
        let (g, s) = draw(seed, n, horizon);
        let report = verify_bounds(&s, &g);
        prop_assert!(report.ok, "{:?}", report.violations);
        prop_assert!(report.max_observed_proc_gap <= s.tau_proc_max());
        prop_assert!(report.max_observed_msg_delay <= s.tau_msg_max());
    }

    #[test]
    fn text_form_round_trips(seed in any::<u64>(), n in 1usize..6, horizon in 1usize..60) {
        let (_, s) = draw(seed, n, horizon);
        let back: Schedule = s.to_text().parse().unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn counters_and_last_activation_agree(seed in any::<u64>(), n in 1usize..6, horizon in 2usize..80) {
        let (_, s) = draw(seed, n, horizon);
        for i in 0..n {
            for k in 0..horizon {
                let count = 1 + (1..=k).filter(|&t| s.is_active(i, t)).count();
                prop_assert_eq!(s.local_iteration_counter(i, k), count);
                let last = (0..k).rev().find(|&t| s.is_active(i, t)).unwrap_or(0);
                prop_assert_eq!(s.pi(i, k), last);
            }
        }
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>(), n in 1usize..6) {
        let (_, a) = draw(seed, n, 50);
        let (_, b) = draw(seed, n, 50);
        prop_assert_eq!(a, b);
    }
}
