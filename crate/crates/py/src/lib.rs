//! Python bindings: graphs, schedules, objectives, the simulator and the
//! bias report. Matrices cross the boundary as lists of rows.

use gradpush::agp::{run_agp, AgpOptions, StepKind, StepSizePolicy};
use gradpush::analysis::{bias_report_unchecked, reweighted_weights, ReweightedObjective};
use gradpush::nalgebra::{DMatrix, DVector};
use gradpush::objectives::{
    generate_synthetic_partition, global_minimizer, synthetic_logistic, weighted_minimizer, Objective,
    QuadraticObjective,
};
use gradpush::schedule::{generate_schedule, verify_bounds, SchedulePolicy};
use gradpush::topology::{AugmentedGraph, ReferenceGraph};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: gradpush::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Directed graph with self-loops; agents are zero-based.
#[pyclass(module = "pygradpush", frozen)]
struct Graph {
    inner: ReferenceGraph,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: ReferenceGraph::new(n, &edges, true).map_err(err)?,
        })
    }

    #[staticmethod]
    fn ring(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ReferenceGraph::directed_ring(n).map_err(err)?,
        })
    }

    #[staticmethod]
    fn complete(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ReferenceGraph::complete(n).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn out_neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.inner.n() {
            return Err(PyValueError::new_err("agent out of range"));
        }
        Ok(self.inner.out_neighbors(i).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edges().count())
    }
}

#[pyclass(module = "pygradpush", frozen)]
struct Schedule {
    inner: gradpush::schedule::Schedule,
}

#[pymethods]
impl Schedule {
    /// `policy` is one of semi_synchronous, uniform_random or rate_ratio.
    #[staticmethod]
    #[pyo3(signature = (graph, horizon, tau_proc_max, tau_msg_max, policy="semi_synchronous", seed=0, activation_prob=0.5, rate_multipliers=None))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        graph: &Graph,
        horizon: usize,
        tau_proc_max: usize,
        tau_msg_max: usize,
        policy: &str,
        seed: u64,
        activation_prob: f64,
        rate_multipliers: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let policy = match policy {
            "semi_synchronous" => SchedulePolicy::SemiSynchronous,
            "uniform_random" => SchedulePolicy::UniformRandom { activation_prob },
            "rate_ratio" => SchedulePolicy::RateRatio(
                rate_multipliers.ok_or_else(|| PyValueError::new_err("rate_ratio needs rate_multipliers"))?,
            ),
            other => return Err(PyValueError::new_err(format!("unknown policy {other:?}"))),
        };
        let inner = generate_schedule(&graph.inner, horizon, tau_proc_max, tau_msg_max, &policy, seed).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: gradpush::schedule::Schedule::from_text(text).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn tau_proc_max(&self) -> usize {
        self.inner.tau_proc_max()
    }

    #[getter]
    fn tau_msg_max(&self) -> usize {
        self.inner.tau_msg_max()
    }

    fn active(&self, k: usize) -> PyResult<Vec<usize>> {
        if k >= self.inner.horizon() {
            return Err(PyValueError::new_err("index beyond the horizon"));
        }
        Ok(self.inner.active(k).to_vec())
    }

    fn activations(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.inner.n() {
            return Err(PyValueError::new_err("agent out of range"));
        }
        Ok(self.inner.activations(i).to_vec())
    }

    /// Returns `(ok, max_proc_gap, max_msg_delay, violations)`.
    fn verify(&self, graph: &Graph) -> (bool, usize, usize, Vec<String>) {
        let r = verify_bounds(&self.inner, &graph.inner);
        (
            r.ok,
            r.max_observed_proc_gap,
            r.max_observed_msg_delay,
            r.violations.iter().map(ToString::to_string).collect(),
        )
    }
}

/// One local objective per agent.
#[pyclass(module = "pygradpush", frozen)]
struct Objectives {
    inner: Vec<Objective>,
}

#[pymethods]
impl Objectives {
    /// `0.5 sum_c a[i][c] (x_c - b[i][c])^2` for agent `i`.
    #[staticmethod]
    fn diagonal_quadratics(curvatures: Vec<Vec<f64>>, centers: Vec<Vec<f64>>) -> PyResult<Self> {
        if curvatures.len() != centers.len() {
            return Err(PyValueError::new_err("one curvature row per center row"));
        }
        let inner = curvatures
            .into_iter()
            .zip(centers)
            .map(|(a, b)| QuadraticObjective::diagonal(DVector::from_vec(a), DVector::from_vec(b)).map(Objective::from))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d, samples_per_agent, conditions, seed=0))]
    fn least_squares(n: usize, d: usize, samples_per_agent: usize, conditions: Vec<f64>, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: generate_synthetic_partition(n, d, samples_per_agent, &conditions, seed).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, samples_per_agent, features, classes, lam=0.1, seed=0))]
    fn logistic(n: usize, samples_per_agent: usize, features: usize, classes: usize, lam: f64, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: synthetic_logistic(n, samples_per_agent, features, classes, lam, seed).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.first().map_or(0, Objective::dim)
    }

    fn gradient(&self, i: usize, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = self.inner.get(i).ok_or_else(|| PyValueError::new_err("agent out of range"))?;
        Ok(f.gradient(&DVector::from_vec(x)).map_err(err)?.iter().copied().collect())
    }

    fn global_minimizer(&self) -> PyResult<Vec<f64>> {
        Ok(global_minimizer(&self.inner).map_err(err)?.iter().copied().collect())
    }

    fn weighted_minimizer(&self, weights: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(weighted_minimizer(&self.inner, &weights).map_err(err)?.iter().copied().collect())
    }
}

/// Runs the simulator and returns a dict with `xbar` (one row per index),
/// `alpha_delta`, `final_z`, `p_bar` and `min_real_weight`.
#[pyfunction]
#[pyo3(signature = (graph, schedule, objectives, x0, kind="diminishing", b=0.1, theta=0.6, weights=None))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    graph: &Graph,
    schedule: &Schedule,
    objectives: &Objectives,
    x0: Vec<Vec<f64>>,
    kind: &str,
    b: f64,
    theta: f64,
    weights: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let kind: StepKind = kind.parse().map_err(err)?;
    let mut policy = StepSizePolicy::new(kind, b, theta);
    if let Some(w) = weights {
        policy = policy.with_weights(w);
    }
    let ag = AugmentedGraph::new(graph.inner.clone(), schedule.inner.tau_msg_max());
    let x0 = matrix(&x0)?;
    let opts = AgpOptions {
        record_z: false,
        ..AgpOptions::default()
    };
    let run = py
        .detach(|| run_agp(&ag, &schedule.inner, &objectives.inner, &x0, &policy, opts))
        .map_err(err)?;
    let rw = reweighted_weights(&run).map_err(err)?;
    let out = PyDict::new(py);
    let xbar: Vec<Vec<f64>> = run.xbar.iter().map(|v| v.iter().copied().collect()).collect();
    out.set_item("xbar", xbar)?;
    out.set_item("alpha_delta", run.alpha_delta.clone())?;
    out.set_item("final_z", rows(&run.final_z))?;
    out.set_item("p_bar", rw.p_bar)?;
    out.set_item("min_real_weight", run.min_real_weight)?;
    Ok(out)
}

/// Bias of the re-weighted minimizer for cumulative step masses `p`.
#[pyfunction]
fn bias_report<'py>(py: Python<'py>, objectives: &Objectives, p: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let rw = ReweightedObjective::from_masses(p).map_err(err)?;
    let r = bias_report_unchecked(&rw, &objectives.inner).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("delta", r.delta_k)?;
    out.set_item("s_bar", r.s_bar)?;
    out.set_item("kappa", r.kappa)?;
    out.set_item("bound", r.bound)?;
    out.set_item("actual", r.actual)?;
    out.set_item("holds", r.holds())?;
    out.set_item("x_star", r.x_star.iter().copied().collect::<Vec<_>>())?;
    out.set_item("x_star_k", r.x_star_k.iter().copied().collect::<Vec<_>>())?;
    Ok(out)
}

#[pymodule]
fn pygradpush(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Schedule>()?;
    m.add_class::<Objectives>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(bias_report, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
