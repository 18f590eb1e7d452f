mod common;

use common::random_objectives;
use gradpush::analysis::{asynchrony_measure, bias_report, reweighted_minimizer, ReweightedObjective};
use gradpush::objectives::global_minimizer;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn asynchrony_measure_stays_in_range(masses in prop::collection::vec(0.0f64..10.0, 1..12)) {
        prop_assume!(masses.iter().sum::<f64>() > 0.0);
        let rw = ReweightedObjective::from_masses(masses).unwrap();
        let delta = asynchrony_measure(&rw.p_bar);
        prop_assert!((0.0..=2f64.sqrt() + 1e-12).contains(&delta));
    }

    #[test]
    fn uniform_masses_have_no_bias(n in 1usize..12, mass in 0.1f64..10.0) {
        let rw = ReweightedObjective::from_masses(vec![mass; n]).unwrap();
        prop_assert!(asynchrony_measure(&rw.p_bar) <= 1e-7);
    }

    #[test]
    fn uniform_weights_recover_the_global_minimizer(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let objs = random_objectives(&mut rng, n, 2);
        let a = reweighted_minimizer(&ReweightedObjective::uniform(n), &objs).unwrap();
        let b = global_minimizer(&objs).unwrap();
        prop_assert!((a - b).amax() <= 1e-10);
    }

    #[test]
    fn bias_bound_holds_for_arbitrary_weights(seed in any::<u64>(), masses in prop::collection::vec(0.01f64..5.0, 1..8)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let objs = random_objectives(&mut rng, masses.len(), 2);
        let rw = ReweightedObjective::from_masses(masses).unwrap();
        let report = bias_report(&rw, &objs);
        prop_assert!(report.is_ok(), "{report:?}");
    }
}
