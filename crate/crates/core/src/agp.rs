//! Asynchronous gradient-push, in matrix form and in per-agent buffer form.
//!
//! Both drivers consume the same [`Schedule`]. At each index every active
//! agent takes a gradient step at its current de-biased estimate `z_i[k]`
//! and then mixes, so the matrix form is
//! `x[k+1] = P[k] (x[k] - grad[k])` with push-sum weights alongside.

use nalgebra::{DMatrix, DVector};
use tracing::warn;

use crate::objectives::{global_constants, Objective};
use crate::pushsum::{pushsum_step, PushSumState};
use crate::schedule::Schedule;
use crate::topology::AugmentedGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// `alpha_i = w_i B / K^theta`.
    Constant,
    /// `alpha_i[k] = w_i B / c_i[k]^theta`.
    Diminishing,
    /// Constant with `w_i = K / c_i[K-1]`.
    KnownRatesConstant,
    /// Diminishing with `w_i` equal to the ratio of partial sums of
    /// `(k+1)^-theta` over `K` and over `c_i[K-1]` terms.
    KnownRatesDiminishing,
}

impl StepKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Diminishing => "diminishing",
            Self::KnownRatesConstant => "known_rates_constant",
            Self::KnownRatesDiminishing => "known_rates_diminishing",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant | Self::KnownRatesConstant)
    }

    pub fn needs_schedule(&self) -> bool {
        matches!(self, Self::KnownRatesConstant | Self::KnownRatesDiminishing)
    }
}

impl std::str::FromStr for StepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "constant" => Self::Constant,
            "diminishing" => Self::Diminishing,
            "known_rates_constant" => Self::KnownRatesConstant,
            "known_rates_diminishing" => Self::KnownRatesDiminishing,
            other => return Err(Error::InvalidPolicy(format!("unknown step-size kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSizePolicy {
    pub kind: StepKind,
    pub b: f64,
    pub theta: f64,
    /// Per-agent multipliers; `None` means all ones. Ignored by the
    /// known-rates kinds, which derive their own.
    pub weights: Option<Vec<f64>>,
    /// `K` in the constant formula; defaults to the schedule horizon.
    pub horizon: Option<usize>,
}

impl StepSizePolicy {
    pub fn new(kind: StepKind, b: f64, theta: f64) -> Self {
        Self {
            kind,
            b,
            theta,
            weights: None,
            horizon: None,
        }
    }

    pub fn constant(b: f64, theta: f64) -> Self {
        Self::new(StepKind::Constant, b, theta)
    }

    pub fn diminishing(b: f64, theta: f64) -> Self {
        Self::new(StepKind::Diminishing, b, theta)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::InvalidPolicy(format!("B = {} must be finite and nonnegative", self.b)));
        }
        if !(self.theta.is_finite() && self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidPolicy(format!("theta = {} outside (0, 1]", self.theta)));
        }
        let recommended = if self.kind.is_constant() {
            self.theta < 1.0
        } else {
            self.theta > 0.5 && self.theta < 1.0
        };
        if !recommended {
            warn!(theta = self.theta, kind = self.kind.name(), "theta outside the range covered by the rate guarantees");
        }
        if self.horizon == Some(0) {
            return Err(Error::InvalidPolicy("horizon must be positive".into()));
        }
        Ok(())
    }

    /// Resolves multipliers for `n` agents over `horizon` indices. The
    /// known-rates kinds need the schedule and must use [`resolve`].
    ///
    /// [`resolve`]: Self::resolve
    pub fn resolve_without_schedule(&self, n: usize, horizon: usize) -> Result<ResolvedSteps> {
        self.validate()?;
        if self.kind.needs_schedule() {
            return Err(Error::InvalidPolicy(format!(
                "{} needs the activation schedule in advance",
                self.kind.name()
            )));
        }
        let weights = match &self.weights {
            None => vec![1.0; n],
            Some(w) if w.len() != n => {
                return Err(Error::InvalidPolicy(format!("{} weights for {n} agents", w.len())))
            }
            Some(w) => {
                if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 1.0)) {
                    return Err(Error::InvalidPolicy(format!("weight {bad} must be at least 1")));
                }
                w.clone()
            }
        };
        Ok(ResolvedSteps {
            constant: self.kind.is_constant(),
            b: self.b,
            theta: self.theta,
            weights,
            horizon: self.horizon.unwrap_or(horizon),
        })
    }

    /// Resolves multipliers against a schedule.
    pub fn resolve(&self, s: &Schedule) -> Result<ResolvedSteps> {
        let horizon = s.horizon();
        match self.kind {
            StepKind::Constant | StepKind::Diminishing => self.resolve_without_schedule(s.n(), horizon),
            StepKind::KnownRatesConstant | StepKind::KnownRatesDiminishing => {
                self.validate()?;
                let big_k = self.horizon.unwrap_or(horizon);
                let last = horizon - 1;
                let weights = (0..s.n())
                    .map(|i| {
                        let c = s.local_iteration_counter(i, last);
                        if self.kind == StepKind::KnownRatesConstant {
                            big_k as f64 / c as f64
                        } else {
                            partial_zeta(horizon, self.theta) / partial_zeta(c, self.theta)
                        }
                    })
                    .collect();
                Ok(ResolvedSteps {
                    constant: self.kind.is_constant(),
                    b: self.b,
                    theta: self.theta,
                    weights,
                    horizon: big_k,
                })
            }
        }
    }
}

/// `sum_{k=0}^{count-1} (k+1)^-theta`.
fn partial_zeta(count: usize, theta: f64) -> f64 {
    (1..=count).map(|c| (c as f64).powf(-theta)).sum()
}

/// A policy with its multipliers and horizon fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSteps {
    pub constant: bool,
    pub b: f64,
    pub theta: f64,
    pub weights: Vec<f64>,
    pub horizon: usize,
}

impl ResolvedSteps {
    /// Step-size of agent `i` whose local counter reads `c_i_k`.
    pub fn alpha(&self, i: usize, c_i_k: usize) -> f64 {
        let denom = if self.constant { self.horizon } else { c_i_k.max(1) };
        self.weights[i] * self.b / (denom as f64).powf(self.theta)
    }
}

/// `alpha_i[k]` for a resolved policy. Constant kinds ignore the counter.
pub fn step_size(steps: &ResolvedSteps, i: usize, _k: usize, c_i_k: usize) -> f64 {
    steps.alpha(i, c_i_k)
}

/// Accumulated step mass `p_i = sum_k alpha_i[k] delta_i[k]` implied by a
/// schedule, without running the optimizer.
pub fn step_mass(s: &Schedule, steps: &ResolvedSteps) -> Vec<f64> {
    (0..s.n())
        .map(|i| {
            s.activations(i)
                .iter()
                .enumerate()
                .map(|(c, _)| steps.alpha(i, c + 1))
                .sum()
        })
        .collect()
}

/// `mu / (2 M^2) * (1 / N_out_max)^(n (tau_bar + 1))`.
pub fn theoretical_step_bound(mu: f64, m: f64, n_out_max: usize, n: usize, tau_bar: usize) -> f64 {
    let exponent = (n * (tau_bar + 1)) as f64;
    mu / (2.0 * m * m) * (1.0 / n_out_max as f64).powf(exponent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgpOptions {
    /// Fail with [`Error::StepSizeExceedsBound`] instead of warning.
    pub enforce_theoretical_bound: bool,
    /// Keep every `z_i[k]`; turn off for long runs where only `xbar` and the
    /// step masses matter.
    pub record_z: bool,
}

impl Default for AgpOptions {
    fn default() -> Self {
        Self {
            enforce_theoretical_bound: false,
            record_z: true,
        }
    }
}

/// Everything logged by a run. Per-index vectors run over `0..=K`; step
/// logs run over `0..K`.
#[derive(Debug, Clone)]
pub struct AgpRun {
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub xbar: Vec<DVector<f64>>,
    pub z: Option<Vec<DMatrix<f64>>>,
    /// `alpha_i[k] delta_i[k]`, one row per index.
    pub alpha_delta: Vec<Vec<f64>>,
    /// `(1/n) sum_i alpha_i[k] delta_i[k] grad f_i(z_i[k])`.
    pub mean_step: Vec<DVector<f64>>,
    pub max_grad_norm: f64,
    pub min_real_weight: f64,
    pub weights: Vec<f64>,
    pub x0: DMatrix<f64>,
    pub final_z: DMatrix<f64>,
}

impl AgpRun {
    pub fn final_xbar(&self) -> &DVector<f64> {
        self.xbar.last().expect("runs log index 0")
    }

    /// `max_i ||z_i[k] - xbar[k]||_1` when `z` was recorded.
    pub fn consensus_error(&self, k: usize) -> Option<f64> {
        let z = self.z.as_ref()?.get(k)?;
        let xbar = &self.xbar[k];
        Some(
            (0..self.n)
                .map(|i| (0..self.d).map(|c| (z[(i, c)] - xbar[c]).abs()).sum::<f64>())
                .fold(0.0, f64::max),
        )
    }

    pub fn final_consensus_error(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                (0..self.d)
                    .map(|c| (self.final_z[(i, c)] - self.final_xbar()[c]).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

struct Prepared {
    steps: ResolvedSteps,
    bound: f64,
}

fn prepare(
    ag: &AugmentedGraph,
    s: &Schedule,
    objs: &[Objective],
    x0: &DMatrix<f64>,
    policy: &StepSizePolicy,
) -> Result<Prepared> {
    let n = ag.n();
    if s.n() != n || objs.len() != n || x0.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "graph has {n} agents, schedule {}, objectives {}, initial state {} rows",
            s.n(),
            objs.len(),
            x0.nrows()
        )));
    }
    if s.tau_msg_max() > ag.tau_msg_max() {
        return Err(Error::DimensionMismatch(format!(
            "schedule allows delay {} but the graph is augmented for {}",
            s.tau_msg_max(),
            ag.tau_msg_max()
        )));
    }
    if let Some(o) = objs.iter().find(|o| o.dim() != x0.ncols()) {
        return Err(Error::DimensionMismatch(format!(
            "objective of dimension {} with initial state of width {}",
            o.dim(),
            x0.ncols()
        )));
    }
    let steps = policy.resolve(s)?;
    let c = global_constants(objs);
    let bound = theoretical_step_bound(c.mu, c.m, ag.base().max_out_degree(), n, s.tau_bar());
    Ok(Prepared { steps, bound })
}

struct StepGuard {
    bound: f64,
    enforce: bool,
    warned: bool,
}

impl StepGuard {
    fn check(&mut self, agent: usize, k: usize, step: f64) -> Result<()> {
        if step > self.bound {
            if self.enforce {
                return Err(Error::StepSizeExceedsBound {
                    agent,
                    k,
                    step,
                    bound: self.bound,
                });
            }
            if !self.warned {
                warn!(step, bound = self.bound, "step-size exceeds the theoretical bound; continuing");
                self.warned = true;
            }
        }
        Ok(())
    }
}

/// Matrix-form driver.
pub fn run_agp(
    ag: &AugmentedGraph,
    s: &Schedule,
    objs: &[Objective],
    x0: &DMatrix<f64>,
    policy: &StepSizePolicy,
    opts: AgpOptions,
) -> Result<AgpRun> {
    let Prepared { steps, bound } = prepare(ag, s, objs, x0, policy)?;
    let n = ag.n();
    let d = x0.ncols();
    let horizon = s.horizon();
    let mut guard = StepGuard {
        bound,
        enforce: opts.enforce_theoretical_bound,
        warned: false,
    };
    let mut state = PushSumState::new(ag, x0)?;
    let mut counters = vec![1usize; n];
    let mut run = AgpRun {
        n,
        d,
        horizon,
        xbar: Vec::with_capacity(horizon + 1),
        z: opts.record_z.then(|| Vec::with_capacity(horizon + 1)),
        alpha_delta: Vec::with_capacity(horizon),
        mean_step: Vec::with_capacity(horizon),
        max_grad_norm: 0.0,
        min_real_weight: 1.0,
        weights: steps.weights.clone(),
        x0: x0.clone(),
        final_z: x0.clone(),
    };
    run.xbar.push(state.xbar());
    if let Some(z) = run.z.as_mut() {
        z.push(state.z_real_matrix()?);
    }

    for k in 0..horizon {
        let mut eta = DMatrix::zeros(n, d);
        let mut ad = vec![0.0; n];
        let mut mean = DVector::zeros(d);
        for &i in s.active(k) {
            if k > 0 {
                counters[i] += 1;
            }
            let z = DVector::from_column_slice(state.z_real(i)?);
            let g = objs[i].gradient(&z)?;
            let alpha = steps.alpha(i, counters[i]);
            guard.check(i, k, alpha)?;
            run.max_grad_norm = run.max_grad_norm.max(g.norm());
            for c in 0..d {
                eta[(i, c)] = -alpha * g[c];
            }
            mean += &g * (alpha / n as f64);
            ad[i] = alpha;
        }
        let m = s.matrix(ag, k)?;
        pushsum_step(&mut state, &m, Some(&eta))?;
        run.alpha_delta.push(ad);
        run.mean_step.push(mean);
        run.xbar.push(state.xbar());
        run.min_real_weight = state.y()[..n].iter().copied().fold(run.min_real_weight, f64::min);
        if let Some(z) = run.z.as_mut() {
            z.push(state.z_real_matrix()?);
        }
    }
    run.final_z = state.z_real_matrix()?;
    Ok(run)
}

struct InFlight {
    deliver: usize,
    x: DVector<f64>,
    y: f64,
}

/// Buffer-form driver: each agent computes, copies `(x/N, y/N)` into the
/// send buffers of its out-neighbours, and on its next gossip phase sums
/// whatever has been delivered to it.
pub fn agent_pseudocode_run(
    ag: &AugmentedGraph,
    s: &Schedule,
    objs: &[Objective],
    x0: &DMatrix<f64>,
    policy: &StepSizePolicy,
    opts: AgpOptions,
) -> Result<AgpRun> {
    let Prepared { steps, bound } = prepare(ag, s, objs, x0, policy)?;
    let g = ag.base();
    let n = ag.n();
    let d = x0.ncols();
    let horizon = s.horizon();
    let mut guard = StepGuard {
        bound,
        enforce: opts.enforce_theoretical_bound,
        warned: false,
    };
    let mut x: Vec<DVector<f64>> = (0..n).map(|i| x0.row(i).transpose()).collect();
    let mut y = vec![1.0; n];
    let mut inbox: Vec<Vec<InFlight>> = (0..n).map(|_| Vec::new()).collect();
    let mut counters = vec![1usize; n];

    let snapshot_z = |x: &[DVector<f64>], y: &[f64]| {
        DMatrix::from_fn(n, d, |i, c| x[i][c] / y[i])
    };
    let xbar_of = |x: &[DVector<f64>], inbox: &[Vec<InFlight>]| {
        let mut total = DVector::zeros(d);
        for xi in x {
            total += xi;
        }
        for msg in inbox.iter().flatten() {
            total += &msg.x;
        }
        total / n as f64
    };

    let mut run = AgpRun {
        n,
        d,
        horizon,
        xbar: vec![xbar_of(&x, &inbox)],
        z: opts.record_z.then(|| vec![snapshot_z(&x, &y)]),
        alpha_delta: Vec::with_capacity(horizon),
        mean_step: Vec::with_capacity(horizon),
        max_grad_norm: 0.0,
        min_real_weight: 1.0,
        weights: steps.weights.clone(),
        x0: x0.clone(),
        final_z: x0.clone(),
    };

    for k in 0..horizon {
        let mut ad = vec![0.0; n];
        let mut mean = DVector::zeros(d);
        // Local computation, then copy shares to the send buffers.
        for &i in s.active(k) {
            if k > 0 {
                counters[i] += 1;
            }
            let z = &x[i] / y[i];
            let grad = objs[i].gradient(&z)?;
            let alpha = steps.alpha(i, counters[i]);
            guard.check(i, k, alpha)?;
            run.max_grad_norm = run.max_grad_norm.max(grad.norm());
            mean += &grad * (alpha / n as f64);
            ad[i] = alpha;
            x[i] -= &grad * alpha;
            let share = 1.0 / g.out_degree(i) as f64;
            for &j in g.out_neighbors(i) {
                if j == i {
                    continue;
                }
                let r = s
                    .delay(k, i, j)
                    .ok_or(Error::MissingDelayAssignment { from: i, to: j })?;
                if r > ag.tau_msg_max() {
                    return Err(Error::DelayOutOfBounds {
                        from: i,
                        to: j,
                        delay: r,
                        bound: ag.tau_msg_max(),
                    });
                }
                inbox[j].push(InFlight {
                    deliver: k + r,
                    x: &x[i] * share,
                    y: y[i] * share,
                });
            }
        }
        // Gossip: keep the self share and absorb everything delivered.
        for &j in s.active(k) {
            let share = 1.0 / g.out_degree(j) as f64;
            x[j] *= share;
            y[j] *= share;
            let (ready, waiting): (Vec<_>, Vec<_>) =
                std::mem::take(&mut inbox[j]).into_iter().partition(|m| m.deliver <= k);
            inbox[j] = waiting;
            for msg in ready {
                x[j] += &msg.x;
                y[j] += msg.y;
            }
        }
        run.alpha_delta.push(ad);
        run.mean_step.push(mean);
        run.xbar.push(xbar_of(&x, &inbox));
        run.min_real_weight = y.iter().copied().fold(run.min_real_weight, f64::min);
        if let Some(z) = run.z.as_mut() {
            z.push(snapshot_z(&x, &y));
        }
    }
    run.final_z = snapshot_z(&x, &y);
    Ok(run)
}
