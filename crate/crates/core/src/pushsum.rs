//! Perturbed push-sum over the delay-augmented state.
//!
//! Each step applies `x <- M (x + eta)`, `y <- M y` and de-biases
//! `z = x / y` row by row. Virtual rows whose weight is zero have no
//! estimate; reading one for a real agent is an error.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{fit_line, l1_distance};
use crate::schedule::Schedule;
use crate::topology::{AugmentedGraph, ConsensusMatrix};
use crate::{Error, Result};

/// Numerators, weights and de-biased estimates for every augmented agent.
#[derive(Debug, Clone)]
pub struct PushSumState {
    n: usize,
    d: usize,
    dim: usize,
    steps: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    z_defined: Vec<bool>,
    scratch_x: Vec<f64>,
    scratch_y: Vec<f64>,
}

impl PushSumState {
    /// Real agents start from the rows of `x0` with unit weight; virtual
    /// agents start empty.
    pub fn new(ag: &AugmentedGraph, x0: &DMatrix<f64>) -> Result<Self> {
        let n = ag.n();
        if x0.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "initial state has {} rows for {n} agents",
                x0.nrows()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state".into()));
        }
        let d = x0.ncols();
        let dim = ag.node_count();
        let mut x = vec![0.0; dim * d];
        for i in 0..n {
            for c in 0..d {
                x[i * d + c] = x0[(i, c)];
            }
        }
        let mut y = vec![0.0; dim];
        y[..n].fill(1.0);
        let mut state = Self {
            n,
            d,
            dim,
            steps: 0,
            x,
            y,
            z: vec![0.0; dim * d],
            z_defined: vec![false; dim],
            scratch_x: vec![0.0; dim * d],
            scratch_y: vec![0.0; dim],
        };
        state.debias();
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps applied so far.
    pub fn index(&self) -> usize {
        self.steps
    }

    pub fn x_row(&self, r: usize) -> &[f64] {
        &self.x[r * self.d..(r + 1) * self.d]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// De-biased estimate of augmented row `r`, if its weight is positive.
    pub fn z_row(&self, r: usize) -> Option<&[f64]> {
        self.z_defined[r].then(|| &self.z[r * self.d..(r + 1) * self.d])
    }

    pub fn z_real(&self, i: usize) -> Result<&[f64]> {
        self.z_row(i).ok_or(Error::DebiasUndefinedForRealNode {
            agent: i,
            k: self.steps,
        })
    }

    pub fn z_real_matrix(&self) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.n, self.d);
        for i in 0..self.n {
            let row = self.z_real(i)?;
            for c in 0..self.d {
                m[(i, c)] = row[c];
            }
        }
        Ok(m)
    }

    /// Column sums of `x` over every augmented row.
    pub fn total_x(&self) -> DVector<f64> {
        let mut s = DVector::zeros(self.d);
        for r in 0..self.dim {
            for c in 0..self.d {
                s[c] += self.x[r * self.d + c];
            }
        }
        s
    }

    pub fn total_y(&self) -> f64 {
        self.y.iter().sum()
    }

    /// Mutual average `1^T x / n`, virtual rows included.
    pub fn xbar(&self) -> DVector<f64> {
        self.total_x() / self.n as f64
    }

    /// Real-row `x` and `y` as matrices, for final-state reporting.
    pub fn x_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.d, &self.x)
    }

    fn debias(&mut self) {
        for r in 0..self.dim {
            let w = self.y[r];
            let defined = w > 0.0;
            self.z_defined[r] = defined;
            for c in 0..self.d {
                self.z[r * self.d + c] = if defined { self.x[r * self.d + c] / w } else { 0.0 };
            }
        }
    }
}

/// Advances `state` by one index: `x <- M (x + eta)`, `y <- M y`.
/// `eta` covers the real agents only (`n x d`).
pub fn pushsum_step(
    state: &mut PushSumState,
    m: &ConsensusMatrix,
    eta: Option<&DMatrix<f64>>,
) -> Result<()> {
    if m.dim() != state.dim {
        return Err(Error::DimensionMismatch(format!(
            "matrix dimension {} for state dimension {}",
            m.dim(),
            state.dim
        )));
    }
    if let Some(e) = eta {
        if e.nrows() != state.n || e.ncols() != state.d {
            return Err(Error::DimensionMismatch(format!(
                "perturbation is {}x{}, expected {}x{}",
                e.nrows(),
                e.ncols(),
                state.n,
                state.d
            )));
        }
        for i in 0..state.n {
            for c in 0..state.d {
                state.x[i * state.d + c] += e[(i, c)];
            }
        }
    }
    m.apply_rows(&state.x, state.d, &mut state.scratch_x);
    m.apply_vec(&state.y, &mut state.scratch_y);
    std::mem::swap(&mut state.x, &mut state.scratch_x);
    std::mem::swap(&mut state.y, &mut state.scratch_y);
    state.steps += 1;
    state.debias();
    for i in 0..state.n {
        if !state.z_defined[i] {
            return Err(Error::DebiasUndefinedForRealNode {
                agent: i,
                k: state.steps,
            });
        }
    }
    Ok(())
}

/// Per-index perturbation applied to the real agents.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    /// The same `n x d` block at every index.
    Constant(DMatrix<f64>),
    /// `base * ratio^k`.
    Geometric { base: DMatrix<f64>, ratio: f64 },
    /// Explicit blocks; indices past the end are unperturbed.
    Sequence(Vec<DMatrix<f64>>),
}

impl Perturbation {
    pub fn at(&self, k: usize) -> Option<DMatrix<f64>> {
        match self {
            Self::None => None,
            Self::Constant(m) => Some(m.clone()),
            Self::Geometric { base, ratio } => Some(base * ratio.powi(k as i32)),
            Self::Sequence(v) => v.get(k).cloned(),
        }
    }
}

/// Everything logged by [`run_pushsum`]; vectors are indexed `0..=K`.
#[derive(Debug, Clone)]
pub struct PushSumTrajectory {
    pub n: usize,
    pub d: usize,
    pub z_real: Vec<DMatrix<f64>>,
    pub xbar: Vec<DVector<f64>>,
    /// Full augmented weight vector per index.
    pub y: Vec<DVector<f64>>,
    /// `1^T x[k]` over all augmented rows.
    pub x_mass: Vec<DVector<f64>>,
    /// `1^T eta[k]`, length `K`.
    pub eta_mass: Vec<DVector<f64>>,
}

impl PushSumTrajectory {
    pub fn len(&self) -> usize {
        self.xbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xbar.is_empty()
    }

    pub fn consensus_errors(&self) -> Vec<f64> {
        (0..self.len()).map(|k| consensus_error(self, k)).collect()
    }
}

/// Runs the schedule to its horizon, logging after every step.
pub fn run_pushsum(
    ag: &AugmentedGraph,
    s: &Schedule,
    x0: &DMatrix<f64>,
    eta: &Perturbation,
) -> Result<PushSumTrajectory> {
    if s.n() != ag.n() {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} agents, graph has {}",
            s.n(),
            ag.n()
        )));
    }
    let mut state = PushSumState::new(ag, x0)?;
    let horizon = s.horizon();
    let mut traj = PushSumTrajectory {
        n: ag.n(),
        d: state.d(),
        z_real: Vec::with_capacity(horizon + 1),
        xbar: Vec::with_capacity(horizon + 1),
        y: Vec::with_capacity(horizon + 1),
        x_mass: Vec::with_capacity(horizon + 1),
        eta_mass: Vec::with_capacity(horizon),
    };
    let log = |st: &PushSumState, t: &mut PushSumTrajectory| -> Result<()> {
        t.z_real.push(st.z_real_matrix()?);
        t.x_mass.push(st.total_x());
        t.xbar.push(st.xbar());
        t.y.push(DVector::from_column_slice(st.y()));
        Ok(())
    };
    log(&state, &mut traj)?;
    for k in 0..horizon {
        let m = s.matrix(ag, k)?;
        let e = eta.at(k);
        traj.eta_mass.push(match &e {
            Some(e) => e.row_sum().transpose(),
            None => DVector::zeros(state.d()),
        });
        pushsum_step(&mut state, &m, e.as_ref())?;
        log(&state, &mut traj)?;
    }
    Ok(traj)
}

/// `max_i ||z_i[k] - xbar[k]||_1`.
pub fn consensus_error(traj: &PushSumTrajectory, k: usize) -> f64 {
    let z = &traj.z_real[k];
    let xbar = traj.xbar[k].as_slice();
    (0..traj.n)
        .map(|i| {
            let row: Vec<f64> = z.row(i).iter().copied().collect();
            l1_distance(&row, xbar)
        })
        .fold(0.0, f64::max)
}

/// Least-squares fit of `ln e_k = ln C + k ln q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub q_hat: f64,
    pub c_hat: f64,
    pub r_squared: f64,
    /// False when `q_hat >= 1`.
    pub decaying: bool,
}

/// Fits a geometric rate to an error sequence, using the position in the
/// slice as `k`. Non-positive samples are skipped.
pub fn fit_geometric_rate(errors: &[f64]) -> Result<RateFit> {
    let (ks, logs): (Vec<f64>, Vec<f64>) = errors
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(k, e)| (k as f64, e.ln()))
        .unzip();
    if ks.len() < 10 {
        return Err(Error::InsufficientData {
            needed: 10,
            got: ks.len(),
        });
    }
    let fit = fit_line(&ks, &logs).ok_or(Error::InsufficientData {
        needed: 10,
        got: ks.len(),
    })?;
    let q_hat = fit.slope.exp();
    Ok(RateFit {
        q_hat,
        c_hat: fit.intercept.exp(),
        r_squared: fit.r_squared,
        decaying: q_hat < 1.0,
    })
}

/// Prefix of `errors` before the first value at or below `floor`; keeps
/// fits away from the rounding plateau.
pub fn decay_window(errors: &[f64], floor: f64) -> &[f64] {
    let end = errors.iter().position(|&e| e <= floor).unwrap_or(errors.len());
    &errors[..end]
}

/// Empirical stand-ins for the mixing constants `C` and `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingConstants {
    pub c: f64,
    pub q: f64,
    pub fit: RateFit,
}

/// Runs unperturbed push-sum from the identity (one coordinate per agent,
/// so every `||x_i[0]||_1 = 1`), fits `q` on the decaying part and takes
/// `C` as the smallest constant with `e_k <= C q^k` on that window.
pub fn estimate_mixing_constants(ag: &AugmentedGraph, s: &Schedule) -> Result<MixingConstants> {
    let n = ag.n();
    let traj = run_pushsum(ag, s, &DMatrix::identity(n, n), &Perturbation::None)?;
    let errors = traj.consensus_errors();
    let window = decay_window(&errors, 1e-13);
    let fit = fit_geometric_rate(window)?;
    let q = fit.q_hat;
    let c = window
        .iter()
        .enumerate()
        .map(|(k, e)| e / q.powi(k as i32))
        .fold(0.0, f64::max);
    Ok(MixingConstants { c, q, fit })
}
