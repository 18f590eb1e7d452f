use gradpush::objectives::{
    generate_synthetic_partition, global_minimizer, synthetic_logistic, synthetic_quadratics, weighted_minimizer,
    Objective,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn fd_error(obj: &Objective, x: &DVector<f64>) -> f64 {
    let g = obj.gradient(x).unwrap();
    let fd = DVector::from_fn(x.len(), |c, _| {
        let h = 1e-6 * x[c].abs().max(1.0);
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[c] += h;
        lo[c] -= h;
        (obj.value(&hi).unwrap() - obj.value(&lo).unwrap()) / (2.0 * h)
    });
    (&fd - &g).norm() / g.norm().max(fd.norm()).max(1e-300)
}

fn point(seed: u64, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |i, _| (((seed >> (i % 60)) & 0xff) as f64 / 64.0) - 2.0 + i as f64 * 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), d in 1usize..5) {
        let mut objs = synthetic_quadratics(d, &[5.0, 50.0], seed).unwrap();
        objs.extend(generate_synthetic_partition(2, d, d + 4, &[3.0, 30.0], seed).unwrap());
        objs.extend(synthetic_logistic(1, 12, d, 3, 0.2, seed).unwrap());
        for obj in &objs {
            let x = point(seed, obj.dim());
            prop_assert!(fd_error(obj, &x) <= 1e-5, "{}", obj.kind());
        }
    }

    #[test]
    fn local_minimizers_are_stationary(seed in any::<u64>(), d in 1usize..4) {
        let mut objs = synthetic_quadratics(d, &[10.0], seed).unwrap();
        objs.extend(synthetic_logistic(2, 10, d, 2, 0.3, seed).unwrap());
        for obj in &objs {
            prop_assert!(obj.gradient(&obj.local_minimizer()).unwrap().norm() <= 1e-9);
        }
    }

    #[test]
    fn weighted_minimizer_ignores_weight_scale(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let objs = synthetic_logistic(3, 10, 2, 2, 0.5, seed).unwrap();
        let w = [1.0, 2.0, 3.0];
        let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let a = weighted_minimizer(&objs, &w).unwrap();
        let b = weighted_minimizer(&objs, &scaled).unwrap();
        prop_assert!((a - b).amax() <= 1e-9);
    }

    #[test]
    fn global_minimizer_is_stationary_for_the_sum(seed in any::<u64>(), d in 1usize..4) {
        let objs = generate_synthetic_partition(3, d, d + 2, &[2.0, 8.0, 20.0], seed).unwrap();
        let x = global_minimizer(&objs).unwrap();
        let g = objs.iter().fold(DVector::zeros(d), |acc, o| acc + o.gradient(&x).unwrap());
        prop_assert!(g.norm() <= 1e-8 * objs.iter().map(|o| o.constants().m).sum::<f64>());
    }
}
