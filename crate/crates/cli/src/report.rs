use gradpush::agp::{AgpRun, StepSizePolicy};
use gradpush::analysis::{bias_report_unchecked, rate_diagnostics, reweighted_weights, BiasReport, RateDiagnostics};
use gradpush::objectives::{global_minimizer, Objective};
use gradpush::pushsum::{estimate_mixing_constants, MixingConstants};
use gradpush::schedule::{verify_bounds, BoundsReport, Schedule};
use gradpush::topology::{AugmentedGraph, ReferenceGraph};
use tracing::warn;

use crate::artifacts::{logged_indices, CurveRow, ThreadedSummary};
use crate::config::BackendKind;
use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct Report {
    pub backend: BackendKind,
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub schedule_bounds: (usize, usize),
    pub bounds: BoundsReport,
    pub p_bar: Vec<f64>,
    pub bias: BiasReport,
    pub rate: RateDiagnostics,
    pub mixing: Option<MixingConstants>,
    pub final_dist_x_star: f64,
    pub final_dist_x_star_k: f64,
    pub final_consensus_error: f64,
    pub min_real_weight: f64,
    pub max_grad_norm: f64,
    pub threaded: Option<ThreadedCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreadedCheck {
    pub iterations: Vec<usize>,
    /// `max |xbar_threaded - xbar_replay|` at the end of the run.
    pub replay_mismatch: f64,
    pub conservation_residual: f64,
}

pub struct AnalysisInput<'a> {
    pub backend: BackendKind,
    pub graph: &'a ReferenceGraph,
    pub schedule: &'a Schedule,
    pub objs: &'a [Objective],
    /// The policy as the run resolved it.
    pub policy: &'a StepSizePolicy,
    pub run: &'a AgpRun,
    pub certificate: bool,
    pub threaded: Option<&'a ThreadedSummary>,
}

pub fn analyze(input: &AnalysisInput) -> CliResult<Report> {
    let run = input.run;
    let rw = reweighted_weights(run)?;
    let bias = bias_report_unchecked(&rw, input.objs)?;
    let mixing = if input.certificate {
        let ag = AugmentedGraph::new(input.graph.clone(), input.schedule.tau_msg_max());
        match estimate_mixing_constants(&ag, input.schedule) {
            Ok(mc) => Some(mc),
            Err(e) => {
                warn!("no rate certificate: {e}");
                None
            }
        }
    } else {
        None
    };
    let steps = input.policy.resolve(input.schedule)?;
    let rate = rate_diagnostics(run, &rw, input.objs, mixing.as_ref().map(|mc| (&steps, mc)))?;
    let xbar = run.final_xbar();
    let threaded = input.threaded.map(|t| ThreadedCheck {
        iterations: t.iterations.clone(),
        replay_mismatch: t
            .final_xbar
            .iter()
            .zip(xbar.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        conservation_residual: t.conservation_residual,
    });
    Ok(Report {
        backend: input.backend,
        n: run.n,
        d: run.d,
        horizon: run.horizon,
        schedule_bounds: (input.schedule.tau_proc_max(), input.schedule.tau_msg_max()),
        bounds: verify_bounds(input.schedule, input.graph),
        final_dist_x_star: (xbar - &bias.x_star).norm(),
        final_dist_x_star_k: (xbar - &bias.x_star_k).norm(),
        final_consensus_error: run.final_consensus_error(),
        p_bar: rw.p_bar.clone(),
        bias,
        rate,
        mixing,
        min_real_weight: run.min_real_weight,
        max_grad_norm: run.max_grad_norm,
        threaded,
    })
}

/// Distances to both minimizers at every logged index.
pub fn curve(run: &AgpRun, objs: &[Objective], report: &Report, stride: usize) -> CliResult<Vec<CurveRow>> {
    let x_star = global_minimizer(objs)?;
    Ok(logged_indices(run.horizon, stride)
        .map(|k| CurveRow {
            k,
            dist_x_star: (&run.xbar[k] - &x_star).norm(),
            dist_x_star_k: (&run.xbar[k] - &report.bias.x_star_k).norm(),
            consensus_error: run.consensus_error(k).unwrap_or(f64::NAN),
        })
        .collect())
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl Report {
    pub fn bound_holds(&self) -> bool {
        self.bias.holds()
    }

    /// `(metric, value)` pairs shared by the text and CSV forms.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(&str, String)> = vec![
            (
                "backend",
                match self.backend {
                    BackendKind::Simulate => "simulate",
                    BackendKind::Threaded => "threaded",
                }
                .to_string(),
            ),
            ("n", self.n.to_string()),
            ("d", self.d.to_string()),
            ("horizon", self.horizon.to_string()),
            ("tau_proc_max", self.schedule_bounds.0.to_string()),
            ("tau_msg_max", self.schedule_bounds.1.to_string()),
            ("max_proc_gap", self.bounds.max_observed_proc_gap.to_string()),
            ("max_msg_delay", self.bounds.max_observed_msg_delay.to_string()),
            ("bounds_ok", self.bounds.ok.to_string()),
            ("p_bar", list(&self.p_bar)),
            ("delta", format!("{:e}", self.bias.delta_k)),
            ("s_bar", format!("{:e}", self.bias.s_bar)),
            ("kappa", format!("{:e}", self.bias.kappa)),
            ("bound", format!("{:e}", self.bias.bound)),
            ("actual", format!("{:e}", self.bias.actual)),
            ("bound_holds", self.bound_holds().to_string()),
            ("x_star", list(self.bias.x_star.as_slice())),
            ("x_star_k", list(self.bias.x_star_k.as_slice())),
            ("mean_sq_err", format!("{:e}", self.rate.mean_sq_err)),
            ("slope", opt(self.rate.loglog_slope)),
            ("slope_r_squared", opt(self.rate.slope_r_squared)),
            ("final_dist_x_star", format!("{:e}", self.final_dist_x_star)),
            ("final_dist_x_star_k", format!("{:e}", self.final_dist_x_star_k)),
            ("final_consensus_error", format!("{:e}", self.final_consensus_error)),
            ("min_real_weight", format!("{:e}", self.min_real_weight)),
            ("max_grad_norm", format!("{:e}", self.max_grad_norm)),
        ];
        if let Some(mc) = &self.mixing {
            rows.push(("mixing_c", format!("{:e}", mc.c)));
            rows.push(("mixing_q", format!("{:e}", mc.q)));
        }
        match &self.rate.certificate {
            Some(c) => {
                rows.push(("certificate_lhs", format!("{:e}", c.lhs)));
                rows.push(("certificate_rhs", format!("{:e}", c.rhs)));
                rows.push(("certificate_holds", c.holds().to_string()));
            }
            None => rows.push(("certificate_holds", String::new())),
        }
        let mut out: Vec<(String, String)> = rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        if let Some(c) = &self.rate.certificate {
            for (name, v) in &c.terms {
                out.push((format!("certificate_{name}"), format!("{v:e}")));
            }
        }
        if let Some(t) = &self.threaded {
            let its: Vec<String> = t.iterations.iter().map(usize::to_string).collect();
            out.push(("threaded_iterations".into(), its.join(" ")));
            out.push(("replay_mismatch".into(), format!("{:e}", t.replay_mismatch)));
            out.push(("conservation_residual".into(), format!("{:e}", t.conservation_residual)));
        }
        out
    }

    pub fn certificate_holds(&self) -> Option<bool> {
        self.rate.certificate.as_ref().map(|c| c.holds())
    }

    pub fn to_text(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in rows {
            s.push_str(&format!("{k:<width$}  {v}\n"));
        }
        s
    }
}
