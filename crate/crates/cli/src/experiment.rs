use std::time::Duration;

use gradpush::agp::{run_agp, AgpOptions, AgpRun, StepKind, StepSizePolicy};
use gradpush::nalgebra::{DMatrix, DVector};
use gradpush::objectives::{
    generate_synthetic_partition, synthetic_logistic, synthetic_quadratics, Objective, QuadraticObjective,
};
use gradpush::runtime::{run_threaded, ThreadedConfig, ThreadedRun};
use gradpush::schedule::{generate_schedule, Schedule, SchedulePolicy};
use gradpush::topology::{AugmentedGraph, ReferenceGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracing::{debug, info};

use crate::config::{BackendKind, ExperimentConfig, GraphKind, ObjectiveKind, PolicyKind};
use crate::error::{CliError, CliResult};

const ER_ATTEMPTS: u64 = 1000;

/// Inputs shared by both backends.
#[derive(Debug, Clone)]
pub struct Problem {
    pub graph: ReferenceGraph,
    pub objs: Vec<Objective>,
    pub x0: DMatrix<f64>,
    pub policy: StepSizePolicy,
}

pub enum Outcome {
    Simulated { schedule: Schedule, run: AgpRun },
    Threaded { threaded: Box<ThreadedRun>, replay: AgpRun },
}

impl Outcome {
    pub fn run(&self) -> &AgpRun {
        match self {
            Self::Simulated { run, .. } | Self::Threaded { replay: run, .. } => run,
        }
    }

    pub fn schedule(&self) -> &Schedule {
        match self {
            Self::Simulated { schedule, .. } => schedule,
            Self::Threaded { threaded, .. } => &threaded.schedule,
        }
    }
}

pub fn build_graph(cfg: &ExperimentConfig) -> CliResult<ReferenceGraph> {
    let g = &cfg.graph;
    let graph = match g.kind {
        GraphKind::Ring => ReferenceGraph::directed_ring(g.n.unwrap_or(0)),
        GraphKind::Complete => ReferenceGraph::complete(g.n.unwrap_or(0)),
        GraphKind::ErdosRenyi => return erdos_renyi(g.n.unwrap_or(0), g.p.unwrap_or(0.0), g.seed),
        GraphKind::File => {
            let path = g.path.as_deref().ok_or_else(|| CliError::Validation("graph.path is required".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ReferenceGraph::parse_edge_list(&text, g.n, true)
        }
    };
    graph.map_err(CliError::Input)
}

/// Directed G(n, p), redrawn until strongly connected.
fn erdos_renyi(n: usize, p: f64, seed: u64) -> CliResult<ReferenceGraph> {
    let mut last = None;
    for attempt in 0..ER_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        match ReferenceGraph::new(n, &edges, true) {
            Ok(g) => {
                debug!(attempt, edges = edges.len(), "erdos-renyi graph accepted");
                return Ok(g);
            }
            Err(e) => last = Some(e),
        }
    }
    Err(CliError::Validation(format!(
        "no strongly connected G({n}, {p}) in {ER_ATTEMPTS} draws; last: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

pub fn build_objectives(cfg: &ExperimentConfig, n: usize) -> CliResult<Vec<Objective>> {
    let o = &cfg.objective;
    let conditions = match (&o.conditions, o.condition) {
        (Some(c), _) => c.clone(),
        (None, Some(c)) => vec![c; n],
        (None, None) => vec![10.0; n],
    };
    if conditions.len() != n {
        return Err(CliError::Validation(format!("{} condition numbers for {n} agents", conditions.len())));
    }
    let objs = match o.kind {
        ObjectiveKind::Quadratic => match (&o.curvatures, &o.centers) {
            (Some(a), Some(b)) => {
                if a.len() != n || b.len() != n {
                    return Err(CliError::Validation(format!("quadratic rows must match n = {n}")));
                }
                a.iter()
                    .zip(b)
                    .map(|(a, b)| {
                        QuadraticObjective::diagonal(DVector::from_vec(a.clone()), DVector::from_vec(b.clone()))
                            .map(Objective::from)
                    })
                    .collect()
            }
            _ => synthetic_quadratics(o.d, &conditions, o.seed),
        },
        ObjectiveKind::LeastSquares => {
            generate_synthetic_partition(n, o.d, o.samples_per_agent.unwrap_or(2 * o.d), &conditions, o.seed)
        }
        ObjectiveKind::Logistic => synthetic_logistic(
            n,
            o.samples_per_agent.unwrap_or(16),
            o.features.unwrap_or(o.d),
            o.classes.unwrap_or(2),
            o.lambda.unwrap_or(0.1),
            o.seed,
        ),
    };
    objs.map_err(CliError::Input)
}

pub fn build_policy(cfg: &ExperimentConfig) -> CliResult<StepSizePolicy> {
    let st = &cfg.steps;
    let kind: StepKind = st.kind.parse().map_err(CliError::Input)?;
    let mut policy = StepSizePolicy::new(kind, st.b, st.theta);
    if let Some(w) = &st.weights {
        policy = policy.with_weights(w.clone());
    }
    if let Some(h) = st.horizon {
        policy = policy.with_horizon(h);
    }
    Ok(policy)
}

pub fn schedule_policy(cfg: &ExperimentConfig) -> SchedulePolicy {
    let s = &cfg.schedule;
    match s.policy {
        PolicyKind::SemiSynchronous => SchedulePolicy::SemiSynchronous,
        PolicyKind::UniformRandom => SchedulePolicy::UniformRandom {
            activation_prob: s.activation_prob.unwrap_or(0.5),
        },
        PolicyKind::RateRatio => SchedulePolicy::RateRatio(s.rate_multipliers.clone().unwrap_or_default()),
    }
}

pub fn build_schedule(cfg: &ExperimentConfig, graph: &ReferenceGraph) -> CliResult<Schedule> {
    let s = &cfg.schedule;
    generate_schedule(
        graph,
        s.horizon,
        s.tau_proc_max,
        cfg.tau_msg_max(),
        &schedule_policy(cfg),
        s.seed,
    )
    .map_err(CliError::Input)
}

pub fn build_problem(cfg: &ExperimentConfig) -> CliResult<Problem> {
    cfg.validate()?;
    let graph = build_graph(cfg)?;
    let objs = build_objectives(cfg, graph.n())?;
    let d = objs[0].dim();
    let x0 = DMatrix::from_element(graph.n(), d, cfg.objective.x0);
    let policy = build_policy(cfg)?;
    Ok(Problem {
        graph,
        objs,
        x0,
        policy,
    })
}

pub fn options(cfg: &ExperimentConfig) -> AgpOptions {
    AgpOptions {
        enforce_theoretical_bound: cfg.steps.enforce_bound,
        record_z: true,
    }
}

pub fn threaded_config(cfg: &ExperimentConfig) -> ThreadedConfig {
    let b = &cfg.backend;
    let ms = |v: f64| Duration::from_secs_f64(v / 1000.0);
    ThreadedConfig {
        budget: b.budget,
        straggler_delays: b.straggler_delays_ms.iter().map(|&v| ms(v)).collect(),
        jitter: ms(b.jitter_ms),
        tau_proc_cap: b.tau_proc_cap,
        inbox_capacity: b.inbox_capacity,
        watchdog: Duration::from_secs_f64(b.watchdog_s),
        seed: b.seed,
    }
}

/// Runs the configured backend. The threaded backend is followed by a
/// simulator replay on the reconstructed schedule, which is what the
/// trajectory and report describe.
pub fn execute(cfg: &ExperimentConfig, problem: &Problem) -> CliResult<Outcome> {
    execute_inner(cfg, problem).map_err(|e| match e {
        CliError::Core(e @ gradpush::Error::NonFinite(_)) => CliError::Diverged(e),
        other => other,
    })
}

fn execute_inner(cfg: &ExperimentConfig, problem: &Problem) -> CliResult<Outcome> {
    let opts = options(cfg);
    match cfg.backend.kind {
        BackendKind::Simulate => {
            let schedule = build_schedule(cfg, &problem.graph)?;
            let ag = AugmentedGraph::new(problem.graph.clone(), schedule.tau_msg_max());
            info!(n = problem.graph.n(), horizon = schedule.horizon(), "simulating");
            let run = run_agp(&ag, &schedule, &problem.objs, &problem.x0, &problem.policy, opts)?;
            Ok(Outcome::Simulated { schedule, run })
        }
        BackendKind::Threaded => {
            info!(n = problem.graph.n(), budget = cfg.backend.budget, "running threaded backend");
            let threaded = run_threaded(
                &problem.graph,
                &problem.objs,
                &problem.x0,
                &problem.policy,
                &threaded_config(cfg),
            )?;
            let replay = threaded.replay(&problem.graph, &problem.objs, &problem.policy, opts)?;
            Ok(Outcome::Threaded {
                threaded: Box::new(threaded),
                replay,
            })
        }
    }
}
