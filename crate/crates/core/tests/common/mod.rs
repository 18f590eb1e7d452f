#![allow(dead_code)]

use gradpush::agp::{StepKind, StepSizePolicy};
use gradpush::objectives::{
    generate_synthetic_partition, synthetic_logistic, Objective, QuadraticObjective,
};
use gradpush::schedule::{generate_schedule, Schedule, SchedulePolicy};
use gradpush::topology::ReferenceGraph;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub g: ReferenceGraph,
    pub s: Schedule,
    pub objs: Vec<Objective>,
    pub x0: DMatrix<f64>,
    pub policy: StepSizePolicy,
}

/// Strongly connected digraph: a ring through a random permutation plus
/// random chords.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, chord_prob: f64) -> ReferenceGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|t| (order[t], order[(t + 1) % n])).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(chord_prob) {
                edges.push((i, j));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    ReferenceGraph::new(n, &edges, true).expect("ring backbone is strongly connected")
}

pub fn random_policy(rng: &mut ChaCha8Rng, n: usize) -> SchedulePolicy {
    match rng.random_range(0..3) {
        0 => SchedulePolicy::SemiSynchronous,
        1 => SchedulePolicy::UniformRandom {
            activation_prob: rng.random_range(0.2..0.9),
        },
        _ => SchedulePolicy::RateRatio((0..n).map(|_| rng.random_range(1.0..4.0)).collect()),
    }
}

pub fn random_schedule(rng: &mut ChaCha8Rng, g: &ReferenceGraph, horizon: usize) -> Schedule {
    let policy = random_policy(rng, g.n());
    let tp = rng.random_range(1..=4);
    let mut tm = rng.random_range(0..=3);
    if matches!(policy, SchedulePolicy::RateRatio(_)) {
        tm = tm.max(tp - 1);
    }
    generate_schedule(g, horizon, tp, tm, &policy, rng.random()).expect("feasible random schedule")
}

pub fn random_quadratics(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Objective> {
    (0..n)
        .map(|_| {
            let a = DVector::from_fn(d, |_, _| rng.random_range(0.5..3.0));
            let b = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
            QuadraticObjective::diagonal(a, b).unwrap().into()
        })
        .collect()
}

/// Quadratic, least-squares or logistic shares.
pub fn random_objectives(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Objective> {
    match rng.random_range(0..4) {
        0 | 1 => random_quadratics(rng, n, d),
        2 => {
            let targets: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
            generate_synthetic_partition(n, d, d + 3, &targets, rng.random()).unwrap()
        }
        _ => synthetic_logistic(n, 8, d, 2, 0.5, rng.random()).unwrap(),
    }
}

pub fn random_step_policy(rng: &mut ChaCha8Rng) -> StepSizePolicy {
    let kind = if rng.random_bool(0.5) {
        StepKind::Constant
    } else {
        StepKind::Diminishing
    };
    StepSizePolicy::new(kind, rng.random_range(0.05..0.4), rng.random_range(0.5..1.0))
}

pub fn random_x0(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_horizon: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(1..=3);
    let g = random_graph(rng, n, 0.25);
    let horizon = rng.random_range(20..=max_horizon);
    let s = random_schedule(rng, &g, horizon);
    let objs = random_objectives(rng, n, d);
    let dim = objs[0].dim();
    let x0 = random_x0(rng, n, dim);
    let policy = random_step_policy(rng);
    Instance { g, s, objs, x0, policy }
}
