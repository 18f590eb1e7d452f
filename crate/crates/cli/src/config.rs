use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment, as read from a TOML file. Every section is flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphConfig,
    pub schedule: ScheduleConfig,
    pub objective: ObjectiveConfig,
    pub steps: StepsConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Ring,
    Complete,
    ErdosRenyi,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    /// Agent count; for `file` graphs it defaults to the largest index.
    pub n: Option<usize>,
    /// Edge probability for `erdos_renyi`.
    pub p: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Edge-list file for `file`, relative to the config file.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    SemiSynchronous,
    UniformRandom,
    RateRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub policy: PolicyKind,
    /// `K`, the number of time indices (simulate backend).
    pub horizon: usize,
    #[serde(default = "one")]
    pub tau_proc_max: usize,
    /// Defaults to `tau_proc_max - 1`, the smallest value every policy
    /// accepts.
    pub tau_msg_max: Option<usize>,
    pub activation_prob: Option<f64>,
    pub rate_multipliers: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Quadratic,
    LeastSquares,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    /// Decision dimension for quadratic and least-squares objectives.
    #[serde(default = "one")]
    pub d: usize,
    /// Condition number shared by every agent.
    pub condition: Option<f64>,
    /// Per-agent condition numbers; overrides `condition`.
    pub conditions: Option<Vec<f64>>,
    /// Explicit diagonal quadratics `0.5 sum_c a_c (x_c - b_c)^2`, one row
    /// per agent. Both must be set together.
    pub curvatures: Option<Vec<Vec<f64>>>,
    pub centers: Option<Vec<Vec<f64>>>,
    pub samples_per_agent: Option<usize>,
    /// Logistic features per sample and class count.
    pub features: Option<usize>,
    pub classes: Option<usize>,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Every entry of every agent's starting point.
    #[serde(default)]
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsConfig {
    /// constant | diminishing | known_rates_constant | known_rates_diminishing
    pub kind: String,
    pub b: f64,
    pub theta: f64,
    pub weights: Option<Vec<f64>>,
    /// `K` in the constant formula when it should differ from the horizon.
    pub horizon: Option<usize>,
    #[serde(default)]
    pub enforce_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Simulate,
    Threaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    /// Local iterations per agent (threaded).
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Extra per-iteration sleep for each agent, in milliseconds.
    #[serde(default)]
    pub straggler_delays_ms: Vec<f64>,
    #[serde(default)]
    pub jitter_ms: f64,
    pub tau_proc_cap: Option<usize>,
    pub inbox_capacity: Option<usize>,
    #[serde(default = "default_watchdog")]
    pub watchdog_s: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Simulate,
            budget: default_budget(),
            straggler_delays_ms: Vec::new(),
            jitter_ms: 0.0,
            tau_proc_cap: None,
            inbox_capacity: None,
            watchdog_s: default_watchdog(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write every `stride`-th index to the trajectory; the final index is
    /// always written.
    #[serde(default = "one")]
    pub trajectory_stride: usize,
    /// Estimate mixing constants and evaluate the rate certificate.
    #[serde(default = "yes")]
    pub certificate: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            trajectory_stride: 1,
            certificate: true,
        }
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_budget() -> usize {
    100
}

fn default_watchdog() -> f64 {
    30.0
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(vec![e.to_string()]))
    }

    /// Reads a config file; a relative graph path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.graph.path, path.parent()) {
            if p.is_relative() {
                cfg.graph.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Returns a copy with `section.key` set to `value`. The value is read
    /// as a TOML literal and falls back to a bare string.
    pub fn with_override(&self, field: &str, value: &str) -> Result<Self, CliError> {
        let (section, key) = field
            .split_once('.')
            .ok_or_else(|| CliError::Validation(format!("field {field:?} must look like section.key")))?;
        let mut root: toml::Table = toml::from_str(&self.to_toml()).expect("round trip");
        let table = root
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("{section:?} is not a section")))?;
        table.insert(key.to_string(), parse_literal(value));
        let text = toml::to_string(&root).expect("table serializes");
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("cannot set {field} = {value}: {e}")))
    }

    pub fn tau_msg_max(&self) -> usize {
        self.schedule
            .tau_msg_max
            .unwrap_or(self.schedule.tau_proc_max.saturating_sub(1))
    }

    /// Every problem found, so one pass reports all of them.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs = Vec::new();
        let g = &self.graph;
        match g.kind {
            GraphKind::File => {
                if g.path.is_none() {
                    errs.push("graph.path is required for file graphs".to_string());
                }
            }
            _ => match g.n {
                None => errs.push("graph.n is required".to_string()),
                Some(0) => errs.push("graph.n must be positive".to_string()),
                _ => {}
            },
        }
        if g.kind == GraphKind::ErdosRenyi {
            match g.p {
                Some(p) if p > 0.0 && p <= 1.0 => {}
                _ => errs.push("graph.p must lie in (0, 1] for erdos_renyi".to_string()),
            }
        }
        let n = g.n;
        let check_len = |errs: &mut Vec<String>, name: &str, len: usize| {
            if let Some(n) = n {
                if len != n {
                    errs.push(format!("{name} has {len} entries for {n} agents"));
                }
            }
        };

        let s = &self.schedule;
        if s.horizon == 0 {
            errs.push("schedule.horizon must be positive".to_string());
        }
        if s.tau_proc_max == 0 {
            errs.push("schedule.tau_proc_max must be at least 1".to_string());
        }
        match s.policy {
            PolicyKind::SemiSynchronous => {}
            PolicyKind::UniformRandom => match s.activation_prob {
                Some(p) if p > 0.0 && p <= 1.0 => {}
                _ => errs.push("schedule.activation_prob must lie in (0, 1] for uniform_random".to_string()),
            },
            PolicyKind::RateRatio => {
                match &s.rate_multipliers {
                    None => errs.push("schedule.rate_multipliers is required for rate_ratio".to_string()),
                    Some(m) => {
                        check_len(&mut errs, "schedule.rate_multipliers", m.len());
                        if m.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                            errs.push("schedule.rate_multipliers must be positive".to_string());
                        }
                    }
                }
                if self.tau_msg_max() + 1 < s.tau_proc_max {
                    errs.push(format!(
                        "rate_ratio needs tau_msg_max >= tau_proc_max - 1 (got {} and {})",
                        self.tau_msg_max(),
                        s.tau_proc_max
                    ));
                }
            }
        }

        let o = &self.objective;
        if o.d == 0 {
            errs.push("objective.d must be positive".to_string());
        }
        let conditions = o.conditions.as_deref().map(<[f64]>::to_vec).or(o.condition.map(|c| vec![c]));
        if let Some(c) = &conditions {
            if c.iter().any(|v| !(v.is_finite() && *v >= 1.0)) {
                errs.push("condition numbers must be at least 1".to_string());
            }
        }
        if let Some(c) = &o.conditions {
            check_len(&mut errs, "objective.conditions", c.len());
        }
        match o.kind {
            ObjectiveKind::Quadratic => match (&o.curvatures, &o.centers) {
                (Some(a), Some(b)) => {
                    check_len(&mut errs, "objective.curvatures", a.len());
                    check_len(&mut errs, "objective.centers", b.len());
                    if a.iter().chain(b).any(|row| row.len() != o.d) {
                        errs.push(format!("every curvature and center row needs d = {} entries", o.d));
                    }
                    if a.iter().flatten().any(|v| !(v.is_finite() && *v > 0.0)) {
                        errs.push("objective.curvatures must be positive".to_string());
                    }
                }
                (None, None) => {}
                _ => errs.push("objective.curvatures and objective.centers go together".to_string()),
            },
            ObjectiveKind::LeastSquares => {
                if let Some(m) = o.samples_per_agent {
                    if m < o.d {
                        errs.push(format!("objective.samples_per_agent must be at least d = {}", o.d));
                    }
                }
            }
            ObjectiveKind::Logistic => {
                if o.classes.is_some_and(|c| c < 2) {
                    errs.push("objective.classes must be at least 2".to_string());
                }
                if o.features == Some(0) || o.samples_per_agent == Some(0) {
                    errs.push("objective.features and samples_per_agent must be positive".to_string());
                }
                if o.lambda.is_some_and(|l| !(l.is_finite() && l > 0.0)) {
                    errs.push("objective.lambda must be positive".to_string());
                }
            }
        }
        if !o.x0.is_finite() {
            errs.push("objective.x0 must be finite".to_string());
        }

        let st = &self.steps;
        if st.kind.parse::<gradpush::agp::StepKind>().is_err() {
            errs.push(format!("unknown steps.kind {:?}", st.kind));
        }
        if !(st.b.is_finite() && st.b >= 0.0) {
            errs.push("steps.b must be finite and nonnegative".to_string());
        }
        if !(st.theta > 0.0 && st.theta <= 1.0) {
            errs.push("steps.theta must lie in (0, 1]".to_string());
        }
        if let Some(w) = &st.weights {
            check_len(&mut errs, "steps.weights", w.len());
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                errs.push("steps.weights must be positive".to_string());
            }
        }
        if st.horizon == Some(0) {
            errs.push("steps.horizon must be positive".to_string());
        }

        let b = &self.backend;
        if b.kind == BackendKind::Threaded {
            if b.budget == 0 {
                errs.push("backend.budget must be positive".to_string());
            }
            if b.straggler_delays_ms.len() > n.unwrap_or(usize::MAX) {
                errs.push("backend.straggler_delays_ms has more entries than agents".to_string());
            }
            if b.straggler_delays_ms.iter().chain([&b.jitter_ms]).any(|v| !(v.is_finite() && *v >= 0.0)) {
                errs.push("backend delays must be finite and nonnegative".to_string());
            }
            if let (Some(cap), Some(n)) = (b.tau_proc_cap, n) {
                if cap < n {
                    errs.push(format!("backend.tau_proc_cap = {cap} must be at least n = {n}"));
                }
            }
            if !(b.watchdog_s.is_finite() && b.watchdog_s > 0.0) {
                errs.push("backend.watchdog_s must be positive".to_string());
            }
            if st.kind.starts_with("known_rates") {
                errs.push("known-rates step sizes need the schedule in advance; use the simulate backend".to_string());
            }
        }
        if self.output.trajectory_stride == 0 {
            errs.push("output.trajectory_stride must be positive".to_string());
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs))
        }
    }
}

fn parse_literal(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}
