mod common;

use common::random_instance;
use gradpush::agp::{
    agent_pseudocode_run, run_agp, step_mass, AgpOptions, StepKind, StepSizePolicy,
};
use gradpush::analysis::reweighted_weights;
use gradpush::schedule::generate_schedule;
use gradpush::schedule::SchedulePolicy;
use gradpush::topology::{AugmentedGraph, ReferenceGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn matrix_and_buffer_forms_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 6, 80);
        let ag = AugmentedGraph::new(inst.g.clone(), inst.s.tau_msg_max());
        let opts = AgpOptions::default();
        let a = run_agp(&ag, &inst.s, &inst.objs, &inst.x0, &inst.policy, opts).unwrap();
        let b = agent_pseudocode_run(&ag, &inst.s, &inst.objs, &inst.x0, &inst.policy, opts).unwrap();
        for k in 0..=a.horizon {
            prop_assert!((&a.xbar[k] - &b.xbar[k]).amax() <= 1e-12);
        }
        prop_assert!((&a.final_z - &b.final_z).amax() <= 1e-12);
    }

    #[test]
    fn step_mass_matches_the_run(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 6, 80);
        let ag = AugmentedGraph::new(inst.g.clone(), inst.s.tau_msg_max());
        let opts = AgpOptions { record_z: false, ..Default::default() };
        let run = run_agp(&ag, &inst.s, &inst.objs, &inst.x0, &inst.policy, opts).unwrap();
        let rw = reweighted_weights(&run).unwrap();
        let direct = step_mass(&inst.s, &inst.policy.resolve(&inst.s).unwrap());
        for (a, b) in rw.p.iter().zip(&direct) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn known_rates_equalize_step_mass(seed in any::<u64>(), n in 2usize..6, tp in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ReferenceGraph::directed_ring(n).unwrap();
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let s = generate_schedule(&g, 300, tp, tp - 1, &SchedulePolicy::RateRatio(m), seed).unwrap();
        for kind in [StepKind::KnownRatesConstant, StepKind::KnownRatesDiminishing] {
            let policy = StepSizePolicy::new(kind, 0.2, 0.7);
            let p = step_mass(&s, &policy.resolve(&s).unwrap());
            let spread = p.iter().copied().fold(f64::MIN, f64::max) - p.iter().copied().fold(f64::MAX, f64::min);
            prop_assert!(spread <= 1e-10, "{}: {p:?}", kind.name());
        }
    }

    #[test]
    fn diminishing_steps_never_increase(b in 0.01f64..2.0, theta in 0.05f64..1.0) {
        let steps = StepSizePolicy::diminishing(b, theta).resolve_without_schedule(1, 100).unwrap();
        for c in 1..200 {
            prop_assert!(steps.alpha(0, c + 1) <= steps.alpha(0, c));
        }
    }
}
