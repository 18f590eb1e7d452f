//! On-disk formats. Every CSV written here has a reader here; agents are
//! zero-based in CSV files.

use std::io::Write;
use std::path::{Path, PathBuf};

use gradpush::agp::AgpRun;
use gradpush::runtime::{EventKind, EventLog, EventRecord};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const TRAJECTORY: &str = "trajectory.csv";
pub const CURVE: &str = "curve.csv";
pub const EVENTS: &str = "events.csv";
pub const METADATA: &str = "metadata.toml";
pub const SCHEDULE: &str = "schedule.txt";
pub const GRAPH: &str = "graph.txt";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const SWEEP: &str = "sweep.csv";

const FORMAT: u32 = 1;

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn corrupt(path: &Path, row: u64, reason: impl Into<String>) -> CliError {
    CliError::Corrupt {
        file: path.to_path_buf(),
        row,
        reason: reason.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let row = e.position().map(|p| p.line()).unwrap_or(0);
    corrupt(path, row, e.to_string())
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let text = read(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

/// Indices written to tidy per-index files.
pub fn logged_indices(horizon: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..=horizon).filter(move |k| k % stride == 0 || *k == horizon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub agent: usize,
    pub z: Vec<f64>,
    pub xbar: Vec<f64>,
    /// Empty at the final index, where no step is taken.
    pub alpha_delta: Option<f64>,
}

pub fn trajectory_rows(run: &AgpRun, stride: usize) -> Vec<TrajectoryRow> {
    let z = run.z.as_ref().expect("runs record z");
    let mut rows = Vec::new();
    for k in logged_indices(run.horizon, stride) {
        for i in 0..run.n {
            rows.push(TrajectoryRow {
                k,
                agent: i,
                z: z[k].row(i).iter().copied().collect(),
                xbar: run.xbar[k].iter().copied().collect(),
                alpha_delta: run.alpha_delta.get(k).map(|r| r[i]),
            });
        }
    }
    rows
}

pub fn trajectory_csv(rows: &[TrajectoryRow], d: usize) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string(), "agent".to_string()];
    header.extend((0..d).map(|c| format!("z_{c}")));
    header.extend((0..d).map(|c| format!("xbar_{c}")));
    header.push("alpha_delta".to_string());
    w.write_record(&header).expect("in-memory writer");
    for r in rows {
        let mut rec = vec![r.k.to_string(), r.agent.to_string()];
        rec.extend(r.z.iter().chain(&r.xbar).map(f64::to_string));
        rec.push(r.alpha_delta.map(|v| v.to_string()).unwrap_or_default());
        w.write_record(&rec).expect("in-memory writer");
    }
    w.into_inner().expect("in-memory writer")
}

pub fn read_trajectory(path: &Path) -> CliResult<Vec<TrajectoryRow>> {
    let text = read(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let width = header.len();
    if width < 3 || (width - 3) % 2 != 0 || &header[0] != "k" || &header[1] != "agent" {
        return Err(corrupt(path, 1, "header must be k, agent, z_*, xbar_*, alpha_delta"));
    }
    let d = (width - 3) / 2;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |c: usize| -> CliResult<f64> {
            rec[c]
                .trim()
                .parse::<f64>()
                .map_err(|_| corrupt(path, line, format!("column {}: {:?} is not a number", &header[c], &rec[c])))
        };
        let int = |c: usize| -> CliResult<usize> {
            rec[c]
                .trim()
                .parse::<usize>()
                .map_err(|_| corrupt(path, line, format!("column {}: {:?} is not an index", &header[c], &rec[c])))
        };
        let last = width - 1;
        rows.push(TrajectoryRow {
            k: int(0)?,
            agent: int(1)?,
            z: (2..2 + d).map(num).collect::<CliResult<_>>()?,
            xbar: (2 + d..2 + 2 * d).map(num).collect::<CliResult<_>>()?,
            alpha_delta: if rec[last].trim().is_empty() { None } else { Some(num(last)?) },
        });
    }
    Ok(rows)
}

/// Plot-ready distances per logged index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub k: usize,
    pub dist_x_star: f64,
    pub dist_x_star_k: f64,
    pub consensus_error: f64,
}

pub fn curve_csv(rows: &[CurveRow]) -> CliResult<Vec<u8>> {
    csv_bytes(rows)
}

pub fn read_curve(path: &Path) -> CliResult<Vec<CurveRow>> {
    read_csv(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EventRow {
    index: usize,
    wall_ms: f64,
    agent: usize,
    kind: String,
    msg_id: Option<u64>,
    peer: Option<usize>,
    digest: u64,
}

pub fn events_csv(log: &EventLog) -> CliResult<Vec<u8>> {
    let rows: Vec<EventRow> = log
        .records
        .iter()
        .map(|r| EventRow {
            index: r.index,
            wall_ms: r.wall_ms,
            agent: r.agent,
            kind: r.kind.name().to_string(),
            msg_id: r.msg_id,
            peer: r.peer,
            digest: r.digest,
        })
        .collect();
    csv_bytes(&rows)
}

pub fn read_events(path: &Path, n: usize, horizon: usize) -> CliResult<EventLog> {
    let rows: Vec<EventRow> = read_csv(path)?;
    let mut records = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        let line = i as u64 + 2;
        let kind: EventKind = r.kind.parse().map_err(|e: gradpush::Error| corrupt(path, line, e.to_string()))?;
        if r.agent >= n || r.peer.is_some_and(|p| p >= n) {
            return Err(corrupt(path, line, format!("agent out of range for n = {n}")));
        }
        if r.index > horizon {
            return Err(corrupt(path, line, format!("index {} beyond horizon {horizon}", r.index)));
        }
        records.push(EventRecord {
            index: r.index,
            wall_ms: r.wall_ms,
            agent: r.agent,
            kind,
            msg_id: r.msg_id,
            peer: r.peer,
            digest: r.digest,
        });
    }
    Ok(EventLog::new(n, horizon, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadedSummary {
    pub iterations: Vec<usize>,
    pub step_horizon: usize,
    pub final_xbar: Vec<f64>,
    pub conservation_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub format: u32,
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub tau_proc_max: usize,
    pub tau_msg_max: usize,
    pub threaded: Option<ThreadedSummary>,
    pub config: ExperimentConfig,
}

impl Metadata {
    pub fn new(
        config: &ExperimentConfig,
        run: &AgpRun,
        schedule: &gradpush::schedule::Schedule,
        threaded: Option<ThreadedSummary>,
    ) -> Self {
        Self {
            format: FORMAT,
            n: run.n,
            d: run.d,
            horizon: run.horizon,
            tau_proc_max: schedule.tau_proc_max(),
            tau_msg_max: schedule.tau_msg_max(),
            threaded,
            config: config.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata is always representable")
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = read(path)?;
        let meta: Self = toml::from_str(&text).map_err(|e| {
            let line = e.span().map_or(0, |s| 1 + text[..s.start].matches('\n').count());
            corrupt(path, line as u64, e.message().to_string())
        })?;
        if meta.format != FORMAT {
            return Err(corrupt(path, 1, format!("unsupported format {}", meta.format)));
        }
        Ok(meta)
    }
}

pub fn read_report_csv(path: &Path) -> CliResult<Vec<(String, String)>> {
    let rows: Vec<ReportRow> = read_csv(path)?;
    Ok(rows.into_iter().map(|r| (r.metric, r.value)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: String,
    pub value: String,
}

pub fn report_csv(rows: &[(String, String)]) -> CliResult<Vec<u8>> {
    let rows: Vec<ReportRow> = rows
        .iter()
        .map(|(m, v)| ReportRow {
            metric: m.clone(),
            value: v.clone(),
        })
        .collect();
    csv_bytes(&rows)
}

/// One row of an aggregated sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SweepRow {
    pub field: String,
    pub value: String,
    pub status: String,
    pub error: Option<String>,
    pub dir: String,
    pub horizon: Option<usize>,
    pub max_proc_gap: Option<usize>,
    pub max_msg_delay: Option<usize>,
    pub delta: Option<f64>,
    pub s_bar: Option<f64>,
    pub kappa: Option<f64>,
    pub bound: Option<f64>,
    pub actual: Option<f64>,
    pub bound_holds: Option<bool>,
    pub mean_sq_err: Option<f64>,
    pub slope: Option<f64>,
    pub slope_r_squared: Option<f64>,
    pub certificate_holds: Option<bool>,
    pub final_dist_x_star: Option<f64>,
    pub final_dist_x_star_k: Option<f64>,
    pub final_consensus_error: Option<f64>,
}

pub fn sweep_csv(rows: &[SweepRow]) -> CliResult<Vec<u8>> {
    csv_bytes(rows)
}

pub fn read_sweep(path: &Path) -> CliResult<Vec<SweepRow>> {
    read_csv(path)
}

/// Fails with [`CliError::MissingArtifacts`] unless every file exists.
pub fn require(dir: &Path, names: &[&str]) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::MissingArtifacts {
            dir: dir.to_path_buf(),
            missing: vec!["run directory".to_string()],
        });
    }
    let paths: Vec<PathBuf> = names.iter().map(|n| dir.join(n)).collect();
    let missing: Vec<String> = names
        .iter()
        .zip(&paths)
        .filter(|(_, p)| !p.is_file())
        .map(|(n, _)| n.to_string())
        .collect();
    if missing.is_empty() {
        Ok(paths)
    } else {
        Err(CliError::MissingArtifacts {
            dir: dir.to_path_buf(),
            missing,
        })
    }
}
