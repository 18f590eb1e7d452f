use std::path::{Path, PathBuf};

use gradpush::agp::{run_agp, AgpRun};
use gradpush::runtime::reconstruct_schedule;
use gradpush::schedule::{verify_bounds, Schedule};
use gradpush::topology::{AugmentedGraph, ReferenceGraph};
use rayon::prelude::*;
use tracing::{info, warn};

use crate::artifacts::{self as art, Metadata, SweepRow, ThreadedSummary};
use crate::config::{BackendKind, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{build_graph, build_objectives, build_policy, build_problem, build_schedule, execute, options, Outcome};
use crate::report::{analyze, curve, AnalysisInput, Report};

/// Loads a config and applies `section.key=value` overrides in order.
pub fn load_config(path: &Path, overrides: &[String]) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    for o in overrides {
        let (field, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("override {o:?} must look like section.key=value")))?;
        cfg = cfg.with_override(field.trim(), value.trim())?;
    }
    Ok(cfg)
}

/// Runs one experiment and writes every artifact into `cfg.output.dir`.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<Report> {
    let problem = build_problem(cfg)?;
    let outcome = execute(cfg, &problem)?;
    let run = outcome.run();
    let schedule = outcome.schedule();
    let (summary, policy) = match &outcome {
        Outcome::Simulated { .. } => (None, problem.policy.clone()),
        Outcome::Threaded { threaded, .. } => (
            Some(ThreadedSummary {
                iterations: threaded.iterations.clone(),
                step_horizon: threaded.step_horizon,
                final_xbar: threaded.final_xbar.iter().copied().collect(),
                conservation_residual: threaded.conservation_residual(),
            }),
            problem.policy.clone().with_horizon(threaded.step_horizon),
        ),
    };
    let report = analyze(&AnalysisInput {
        backend: cfg.backend.kind,
        graph: &problem.graph,
        schedule,
        objs: &problem.objs,
        policy: &policy,
        run,
        certificate: cfg.output.certificate,
        threaded: summary.as_ref(),
    })?;

    let dir = &cfg.output.dir;
    let stride = cfg.output.trajectory_stride;
    art::write_atomic(&dir.join(art::GRAPH), problem.graph.to_edge_list().as_bytes())?;
    art::write_atomic(&dir.join(art::SCHEDULE), schedule.to_text().as_bytes())?;
    if let Outcome::Threaded { threaded, .. } = &outcome {
        art::write_atomic(&dir.join(art::EVENTS), &art::events_csv(&threaded.log)?)?;
    }
    let rows = art::trajectory_rows(run, stride);
    art::write_atomic(&dir.join(art::TRAJECTORY), &art::trajectory_csv(&rows, run.d))?;
    let curve_rows = curve(run, &problem.objs, &report, stride)?;
    art::write_atomic(&dir.join(art::CURVE), &art::curve_csv(&curve_rows)?)?;
    let meta = Metadata::new(cfg, run, schedule, summary);
    art::write_atomic(&dir.join(art::METADATA), meta.to_toml().as_bytes())?;
    write_report(dir, &report)?;
    info!(dir = %dir.display(), "artifacts written");
    Ok(report)
}

fn write_report(dir: &Path, report: &Report) -> CliResult<()> {
    art::write_atomic(&dir.join(art::REPORT_TXT), report.to_text().as_bytes())?;
    art::write_atomic(&dir.join(art::REPORT_CSV), &art::report_csv(&report.rows())?)
}

/// Recomputes the report of a finished run from its artifacts. Simulated
/// runs are replayed on the stored schedule; threaded runs on the schedule
/// reconstructed from the event log. The stored trajectory must match the
/// replay.
pub fn cmd_analyze(dir: &Path) -> CliResult<Report> {
    let paths = art::require(dir, &[art::METADATA, art::TRAJECTORY, art::GRAPH])?;
    let meta = Metadata::read(&paths[0])?;
    let rows = art::read_trajectory(&paths[1])?;
    let graph_text = std::fs::read_to_string(&paths[2]).map_err(|e| CliError::io(&paths[2], e))?;
    let graph = ReferenceGraph::parse_edge_list(&graph_text, Some(meta.n), true).map_err(|e| CliError::Corrupt {
        file: paths[2].clone(),
        row: 0,
        reason: e.to_string(),
    })?;
    let cfg = &meta.config;
    let objs = build_objectives(cfg, meta.n)?;
    let x0 = gradpush::nalgebra::DMatrix::from_element(meta.n, meta.d, cfg.objective.x0);
    let mut policy = build_policy(cfg)?;

    let schedule = match cfg.backend.kind {
        BackendKind::Simulate => {
            let path = art::require(dir, &[art::SCHEDULE])?.remove(0);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            Schedule::from_text(&text).map_err(|e| CliError::Corrupt {
                file: path,
                row: match &e {
                    gradpush::Error::ScheduleParse { line, .. } => *line as u64,
                    _ => 0,
                },
                reason: e.to_string(),
            })?
        }
        BackendKind::Threaded => {
            let path = art::require(dir, &[art::EVENTS])?.remove(0);
            let log = art::read_events(&path, meta.n, meta.horizon)?;
            let t = meta
                .threaded
                .as_ref()
                .ok_or_else(|| CliError::Validation("threaded run without a threaded summary".into()))?;
            policy = policy.with_horizon(t.step_horizon);
            reconstruct_schedule(&log).map_err(CliError::Input)?
        }
    };
    if schedule.n() != meta.n || schedule.horizon() != meta.horizon {
        return Err(CliError::Validation(format!(
            "schedule has n = {}, K = {} but metadata says n = {}, K = {}",
            schedule.n(),
            schedule.horizon(),
            meta.n,
            meta.horizon
        )));
    }
    let ag = AugmentedGraph::new(graph.clone(), schedule.tau_msg_max());
    let run = run_agp(&ag, &schedule, &objs, &x0, &policy, options(cfg))?;
    check_trajectory(&paths[1], &rows, &run)?;
    let report = analyze(&AnalysisInput {
        backend: cfg.backend.kind,
        graph: &graph,
        schedule: &schedule,
        objs: &objs,
        policy: &policy,
        run: &run,
        certificate: cfg.output.certificate,
        threaded: meta.threaded.as_ref(),
    })?;
    write_report(dir, &report)?;
    Ok(report)
}

fn check_trajectory(path: &Path, rows: &[art::TrajectoryRow], run: &AgpRun) -> CliResult<()> {
    let z = run.z.as_ref().expect("runs record z");
    for (i, r) in rows.iter().enumerate() {
        let line = i as u64 + 2;
        let bad = |why: String| CliError::Corrupt {
            file: path.to_path_buf(),
            row: line,
            reason: why,
        };
        if r.k > run.horizon || r.agent >= run.n || r.z.len() != run.d {
            return Err(bad(format!("k = {}, agent = {} outside the run", r.k, r.agent)));
        }
        let zk = z[r.k].row(r.agent);
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        let z_ok = r.z.iter().zip(zk.iter()).all(|(a, b)| same(*a, *b));
        let x_ok = r.xbar.iter().zip(run.xbar[r.k].iter()).all(|(a, b)| same(*a, *b));
        let ad_ok = match (r.alpha_delta, run.alpha_delta.get(r.k)) {
            (Some(a), Some(row)) => same(a, row[r.agent]),
            (None, None) => true,
            _ => false,
        };
        if !(z_ok && x_ok && ad_ok) {
            return Err(bad(format!("values at k = {} disagree with the replayed run", r.k)));
        }
    }
    Ok(())
}

/// Checks a config without running it. For the simulate backend the
/// generated schedule is verified too; `schedule` checks an existing file
/// against the configured graph instead.
pub fn cmd_validate(cfg: &ExperimentConfig, schedule: Option<&Path>) -> CliResult<String> {
    cfg.validate()?;
    let graph = build_graph(cfg)?;
    let objs = build_objectives(cfg, graph.n())?;
    build_policy(cfg)?;
    let s = match schedule {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Some(Schedule::from_text(&text).map_err(CliError::Input)?)
        }
        None if cfg.backend.kind == BackendKind::Simulate => Some(build_schedule(cfg, &graph)?),
        None => None,
    };
    let mut summary = format!("valid: n = {}, d = {}", graph.n(), objs[0].dim());
    if let Some(s) = s {
        let report = verify_bounds(&s, &graph);
        if !report.ok {
            let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
            return Err(CliError::Validation(format!("schedule violates its bounds:\n  {}", lines.join("\n  "))));
        }
        summary.push_str(&format!(
            ", K = {}, max proc gap {} <= {}, max msg delay {} <= {}",
            s.horizon(),
            report.max_observed_proc_gap,
            s.tau_proc_max(),
            report.max_observed_msg_delay,
            s.tau_msg_max()
        ));
    }
    Ok(summary)
}

fn cell_name(field: &str, value: &str) -> String {
    format!("{field}={value}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' })
        .collect()
}

/// One run per value of `field`, in parallel, with an aggregated table at
/// `out/sweep.csv`. Failed cells are listed in the table and turn the
/// result into [`CliError::PartialSweep`].
pub fn cmd_sweep(base: &ExperimentConfig, field: &str, values: &[String], out: Option<PathBuf>) -> CliResult<Vec<SweepRow>> {
    let values: Vec<&str> = values.iter().map(|v| v.trim()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Validation("sweep needs at least one value".into()));
    }
    let out = out.unwrap_or_else(|| base.output.dir.clone());
    let cells: Vec<(String, ExperimentConfig)> = values
        .iter()
        .map(|v| {
            let mut cfg = base.with_override(field, v)?;
            cfg.output.dir = out.join(cell_name(field, v));
            Ok((v.to_string(), cfg))
        })
        .collect::<CliResult<_>>()?;

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|(value, cfg)| {
            let mut row = SweepRow {
                field: field.to_string(),
                value: value.clone(),
                dir: cfg.output.dir.display().to_string(),
                ..SweepRow::default()
            };
            match cmd_run(cfg) {
                Ok(r) => {
                    row.status = "ok".into();
                    row.horizon = Some(r.horizon);
                    row.max_proc_gap = Some(r.bounds.max_observed_proc_gap);
                    row.max_msg_delay = Some(r.bounds.max_observed_msg_delay);
                    row.delta = Some(r.bias.delta_k);
                    row.s_bar = Some(r.bias.s_bar);
                    row.kappa = Some(r.bias.kappa);
                    row.bound = Some(r.bias.bound);
                    row.actual = Some(r.bias.actual);
                    row.bound_holds = Some(r.bound_holds());
                    row.mean_sq_err = Some(r.rate.mean_sq_err);
                    row.slope = r.rate.loglog_slope;
                    row.slope_r_squared = r.rate.slope_r_squared;
                    row.certificate_holds = r.certificate_holds();
                    row.final_dist_x_star = Some(r.final_dist_x_star);
                    row.final_dist_x_star_k = Some(r.final_dist_x_star_k);
                    row.final_consensus_error = Some(r.final_consensus_error);
                }
                Err(e) => {
                    warn!(value = %value, "sweep cell failed: {e}");
                    row.status = "failed".into();
                    row.error = Some(e.to_string());
                }
            }
            row
        })
        .collect();
    art::write_atomic(&out.join(art::SWEEP), &art::sweep_csv(&rows)?)?;
    let failed: Vec<&SweepRow> = rows.iter().filter(|r| r.status != "ok").collect();
    if failed.is_empty() {
        Ok(rows)
    } else {
        for r in &failed {
            eprintln!("failed cell {}={}: {}", r.field, r.value, r.error.as_deref().unwrap_or(""));
        }
        Err(CliError::PartialSweep {
            failed: failed.len(),
            total: rows.len(),
        })
    }
}
