//! Post-hoc analysis of completed runs: the re-weighted objective implied
//! by the applied step masses, the bias bound between its minimizer and the
//! true one, and rate diagnostics with empirical certificates.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::agp::{AgpRun, ResolvedSteps};
use crate::linalg::{fit_line, l1_norm, logspace};
use crate::objectives::{global_constants, global_minimizer, weighted_minimizer, Objective};
use crate::pushsum::MixingConstants;
use crate::{Error, Result};

/// Cumulative step masses `p_i` and their normalization `p_bar_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightedObjective {
    pub p: Vec<f64>,
    pub p_bar: Vec<f64>,
}

impl ReweightedObjective {
    pub fn from_masses(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptyRun);
        }
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::DegenerateWeights);
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        let p_bar = p.iter().map(|v| v / total).collect();
        Ok(Self { p, p_bar })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            p: vec![1.0; n],
            p_bar: vec![1.0 / n as f64; n],
        }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }
}

/// `p_i = sum_k alpha_i[k] delta_i[k]` from the logged step masses.
pub fn reweighted_weights(run: &AgpRun) -> Result<ReweightedObjective> {
    if run.alpha_delta.is_empty() {
        return Err(Error::EmptyRun);
    }
    let mut p = vec![0.0; run.n];
    for row in &run.alpha_delta {
        for (acc, v) in p.iter_mut().zip(row) {
            *acc += v;
        }
    }
    ReweightedObjective::from_masses(p)
}

/// `x*_K`, the minimizer of `sum_i p_bar_i f_i`.
pub fn reweighted_minimizer(rw: &ReweightedObjective, objs: &[Objective]) -> Result<DVector<f64>> {
    weighted_minimizer(objs, &rw.p_bar)
}

/// `sqrt(sum_i |1/n - p_bar_i|)`.
pub fn asynchrony_measure(p_bar: &[f64]) -> f64 {
    let n = p_bar.len() as f64;
    p_bar.iter().map(|p| (1.0 / n - p).abs()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub delta_k: f64,
    /// `S_ij = ||x*_i - x*_j||`.
    pub s_pairwise: DMatrix<f64>,
    /// `S_i = ||x*_i - x*||`.
    pub s_to_global: Vec<f64>,
    /// `max_i min_j (S_ij + S_j)`, with `j = i` allowed.
    pub s_bar: f64,
    pub kappa: f64,
    pub bound: f64,
    pub actual: f64,
    pub x_star: DVector<f64>,
    pub x_star_k: DVector<f64>,
}

impl BiasReport {
    pub fn holds(&self) -> bool {
        self.actual <= self.bound * (1.0 + 1e-9) + 1e-12
    }
}

impl fmt::Display for BiasReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "delta_K = {:.6e}", self.delta_k)?;
        writeln!(f, "S_bar   = {:.6e}", self.s_bar)?;
        writeln!(f, "kappa   = {:.6e}", self.kappa)?;
        writeln!(f, "bound   = {:.6e}", self.bound)?;
        write!(f, "actual  = {:.6e}", self.actual)
    }
}

/// Computes every quantity in the bias bound and checks
/// `||x*_K - x*|| <= S_bar sqrt(kappa) delta_K / sqrt(2)`.
pub fn bias_report(rw: &ReweightedObjective, objs: &[Objective]) -> Result<BiasReport> {
    let report = bias_report_unchecked(rw, objs)?;
    if !report.holds() {
        return Err(Error::BoundViolated {
            actual: report.actual,
            bound: report.bound,
        });
    }
    Ok(report)
}

/// As [`bias_report`] but returns the report even when the bound fails.
pub fn bias_report_unchecked(rw: &ReweightedObjective, objs: &[Objective]) -> Result<BiasReport> {
    let n = objs.len();
    if rw.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {n} objectives",
            rw.n()
        )));
    }
    let x_star = global_minimizer(objs)?;
    let x_star_k = reweighted_minimizer(rw, objs)?;
    let locals: Vec<DVector<f64>> = objs.iter().map(Objective::local_minimizer).collect();
    let s_pairwise = DMatrix::from_fn(n, n, |i, j| (&locals[i] - &locals[j]).norm());
    let s_to_global: Vec<f64> = locals.iter().map(|x| (x - &x_star).norm()).collect();
    let s_bar = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| s_pairwise[(i, j)] + s_to_global[j])
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let kappa = global_constants(objs).kappa();
    let delta_k = asynchrony_measure(&rw.p_bar);
    let bound = s_bar * kappa.sqrt() * delta_k / 2f64.sqrt();
    let actual = (&x_star_k - &x_star).norm();
    Ok(BiasReport {
        delta_k,
        s_pairwise,
        s_to_global,
        s_bar,
        kappa,
        bound,
        actual,
        x_star,
        x_star_k,
    })
}

/// Which rate guarantee a certificate instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// Three-term bound for constant step-sizes, with the closed-form
    /// constants `A1`, `A2`, `A3`.
    Constant,
    /// Single-term bound for diminishing step-sizes, with `A` summed from
    /// the run itself.
    Diminishing,
}

/// Right-hand side of a rate guarantee evaluated with empirical constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub lhs: f64,
    pub rhs: f64,
    /// Named intermediate constants, for reports.
    pub terms: Vec<(&'static str, f64)>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateDiagnostics {
    /// `(1/K) sum_{k<K} ||xbar[k] - x*_K||^2`.
    pub mean_sq_err: f64,
    /// Slope of log prefix mean-squared error against log prefix length
    /// over the final decade of prefixes.
    pub loglog_slope: Option<f64>,
    pub slope_r_squared: Option<f64>,
    pub prefix_points: Vec<(usize, f64)>,
    pub certificate: Option<Certificate>,
}

/// Prefix mean-squared errors `(1/K') sum_{k<K'} ||xbar[k] - target||^2`
/// for every `K'` in `1..=K`.
pub fn prefix_mean_sq_errors(run: &AgpRun, target: &DVector<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(run.horizon);
    let mut acc = 0.0;
    for k in 0..run.horizon {
        acc += (&run.xbar[k] - target).norm_squared();
        out.push(acc / (k + 1) as f64);
    }
    out
}

/// `(slope, r_squared, (length, prefix error) samples)`.
pub type SlopeFit = (f64, f64, Vec<(usize, f64)>);

/// Log-log slope of prefix errors at `points` log-spaced lengths in
/// `[K/10, K]`.
pub fn loglog_slope(prefix: &[f64], points: usize) -> Option<SlopeFit> {
    let big_k = prefix.len();
    if big_k < 20 {
        return None;
    }
    let lo = (big_k / 10).max(1) as f64;
    let mut lengths: Vec<usize> = logspace(lo, big_k as f64, points)
        .into_iter()
        .map(|v| (v.round() as usize).clamp(1, big_k))
        .collect();
    lengths.dedup();
    let samples: Vec<(usize, f64)> = lengths.iter().map(|&l| (l, prefix[l - 1])).collect();
    if samples.iter().any(|(_, e)| *e <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = samples.iter().map(|(l, _)| (*l as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, e)| e.ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Some((fit.slope, fit.r_squared, samples))
}

/// Mean-squared error against `x*_K`, the prefix slope, and optionally the
/// rate certificate for the policy that produced the run.
pub fn rate_diagnostics(
    run: &AgpRun,
    rw: &ReweightedObjective,
    objs: &[Objective],
    certify: Option<(&ResolvedSteps, &MixingConstants)>,
) -> Result<RateDiagnostics> {
    if run.horizon == 0 {
        return Err(Error::EmptyRun);
    }
    let x_star_k = reweighted_minimizer(rw, objs)?;
    let prefix = prefix_mean_sq_errors(run, &x_star_k);
    let mean_sq_err = *prefix.last().expect("horizon is positive");
    let (loglog_slope, slope_r_squared, prefix_points) = match loglog_slope(&prefix, 20) {
        Some((s, r2, pts)) => (Some(s), Some(r2), pts),
        None => (None, None, Vec::new()),
    };
    let certificate = certify.and_then(|(steps, mc)| certificate(run, objs, &x_star_k, mean_sq_err, steps, mc));
    Ok(RateDiagnostics {
        mean_sq_err,
        loglog_slope,
        slope_r_squared,
        prefix_points,
        certificate,
    })
}

/// Evaluates the rate bound for `run` using the observed gradient bound
/// `L` and the empirical mixing constants. Returns `None` when the bound is
/// undefined (`B = 0` or `q >= 1`).
pub fn certificate(
    run: &AgpRun,
    objs: &[Objective],
    x_star_k: &DVector<f64>,
    lhs: f64,
    steps: &ResolvedSteps,
    mc: &MixingConstants,
) -> Option<Certificate> {
    if steps.b <= 0.0 || mc.q.is_nan() || mc.q >= 1.0 {
        return None;
    }
    let n = run.n as f64;
    let big_k = run.horizon as f64;
    let consts = global_constants(objs);
    let (mu, kappa) = (consts.mu, consts.kappa());
    let l = run.max_grad_norm;
    let (c, q) = (mc.c, mc.q);
    let b = steps.b;
    let theta = steps.theta;
    let x0_norms: Vec<f64> = (0..run.n)
        .map(|i| l1_norm(&run.x0.row(i).iter().copied().collect::<Vec<_>>()))
        .collect();
    let start_gap = (&run.xbar[0] - x_star_k).norm_squared();

    if steps.constant {
        let scale = b / n * steps.weights.iter().sum::<f64>();
        let x0_norm = x0_norms.iter().copied().fold(0.0, f64::max);
        let a1 = (l.sqrt() * scale).powi(2);
        let a2 = 2.0 * kappa * l * l * c * x0_norm * scale / (1.0 - q);
        let a3 = 2.0 * kappa * l.powi(3) * c * scale * scale / (1.0 - q);
        let denom = 2.0 * mu * b;
        let rhs = big_k.powf(-theta) * n * (a1 + a3) / denom
            + n * a2 / (big_k * denom)
            + big_k.powf(theta - 1.0) * n * start_gap / denom;
        Some(Certificate {
            kind: CertificateKind::Constant,
            lhs,
            rhs,
            terms: vec![("A1", a1), ("A2", a2), ("A3", a3), ("L", l), ("C", c), ("q", q)],
        })
    } else {
        let mut chi = vec![0.0; run.n];
        let (mut b1, mut b2, mut b3) = (0.0, 0.0, 0.0);
        for (k, row) in run.alpha_delta.iter().enumerate() {
            let qk = q.powi(k as i32);
            let mut mean_step = 0.0;
            let mut mean_gamma = 0.0;
            let mut mean_chi = 0.0;
            for i in 0..run.n {
                let ad = row[i];
                chi[i] = q * chi[i] + kappa * l * l * c * ad;
                let gamma = kappa * l * c * x0_norms[i] * qk;
                mean_step += ad / n;
                mean_gamma += ad * gamma / n;
                mean_chi += ad * chi[i] / n;
            }
            b1 += l * mean_step * mean_step;
            b2 += 2.0 * l * mean_gamma;
            b3 += 2.0 * l * mean_chi;
        }
        let a = b1 + b2 + b3;
        let rhs = big_k.powf(theta - 1.0) * n * (start_gap + a) / (2.0 * mu * b);
        Some(Certificate {
            kind: CertificateKind::Diminishing,
            lhs,
            rhs,
            terms: vec![("b1", b1), ("b2", b2), ("b3", b3), ("A", a), ("L", l), ("C", c), ("q", q)],
        })
    }
}
