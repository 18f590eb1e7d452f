//! Local objectives with exact gradients, curvature constants and
//! minimizers, plus synthetic data with controlled conditioning.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{logspace, symmetric_extremes};
use crate::{Error, Result};

/// Ridge added to rank-deficient least-squares terms.
pub const LEAST_SQUARES_RIDGE: f64 = 1e-8;

/// Gradient-norm target for iterative minimizers.
pub const MINIMIZER_TOL: f64 = 1e-10;

/// Strong-convexity modulus and gradient Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub mu: f64,
    pub m: f64,
}

impl Constants {
    pub fn kappa(&self) -> f64 {
        self.m / self.mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Curvature {
    Dense(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

impl Curvature {
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Dense(a) => a * v,
            Self::Diagonal(a) => a.component_mul(v),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Diagonal(a) => DMatrix::from_diagonal(a),
        }
    }
}

/// `f(x) = 1/2 (x - b)^T A (x - b)` with `A` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    a: Curvature,
    b: DVector<f64>,
    constants: Constants,
}

impl QuadraticObjective {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "curvature {}x{} with center of length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic coefficients".into()));
        }
        let scale = a.amax().max(1.0);
        if (&a - a.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidObjective("curvature matrix is not symmetric".into()));
        }
        let (mu, m) = symmetric_extremes(&a);
        if mu <= 0.0 {
            return Err(Error::InvalidObjective(format!(
                "curvature is not positive definite (smallest eigenvalue {mu:e})"
            )));
        }
        Ok(Self {
            a: Curvature::Dense(a),
            b,
            constants: Constants { mu, m },
        })
    }

    pub fn diagonal(a: DVector<f64>, b: DVector<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} with center of length {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic coefficients".into()));
        }
        if a.is_empty() || a.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidObjective("diagonal curvature must be positive".into()));
        }
        let mu = a.min();
        let m = a.max();
        Ok(Self {
            a: Curvature::Diagonal(a),
            b,
            constants: Constants { mu, m },
        })
    }

    /// One-dimensional `f(x) = a/2 (x - b)^2`.
    pub fn scalar(a: f64, b: f64) -> Result<Self> {
        Self::diagonal(DVector::from_element(1, a), DVector::from_element(1, b))
    }

    pub fn curvature(&self) -> &Curvature {
        &self.a
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r = x - &self.b;
        0.5 * r.dot(&self.a.apply(&r))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.apply(&(x - &self.b))
    }
}

/// One agent's share of `F(w) = 1/D sum_l (w^T x_l - y_l)^2`, where `D`
/// counts samples across all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresObjective {
    x: DMatrix<f64>,
    y: DVector<f64>,
    total_samples: usize,
    ridge: f64,
    quadratic: QuadraticObjective,
}

impl LeastSquaresObjective {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, total_samples: usize) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples with {} targets",
                x.nrows(),
                y.len()
            )));
        }
        if total_samples == 0 || x.ncols() == 0 {
            return Err(Error::InvalidObjective("empty least-squares problem".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("least-squares data".into()));
        }
        let scale = 2.0 / total_samples as f64;
        let mut a = x.transpose() * &x * scale;
        a = (&a + a.transpose()) * 0.5;
        let (lo, hi) = symmetric_extremes(&a);
        let ridge = if lo <= 1e-12 * hi.max(1.0) {
            LEAST_SQUARES_RIDGE
        } else {
            0.0
        };
        for c in 0..a.nrows() {
            a[(c, c)] += ridge;
        }
        let rhs = x.transpose() * &y * scale;
        let b = solve_spd(&a, &rhs)?;
        let quadratic = QuadraticObjective::new(a, b)?;
        Ok(Self {
            x,
            y,
            total_samples,
            ridge,
            quadratic,
        })
    }

    /// True when a ridge was added for strong convexity.
    pub fn regularized(&self) -> bool {
        self.ridge > 0.0
    }

    pub fn as_quadratic(&self) -> &QuadraticObjective {
        &self.quadratic
    }

    pub fn data(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.x, &self.y)
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        let r = &self.x * w - &self.y;
        r.norm_squared() / self.total_samples as f64 + 0.5 * self.ridge * w.norm_squared()
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let r = &self.x * w - &self.y;
        self.x.transpose() * r * (2.0 / self.total_samples as f64) + w * self.ridge
    }
}

/// Multinomial logistic loss with `(lambda / 2) ||W||_F^2`. The parameter
/// vector is `W` (classes x features) flattened row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticObjective {
    x: DMatrix<f64>,
    labels: Vec<usize>,
    classes: usize,
    lambda: f64,
    smoothness: f64,
    minimizer: DVector<f64>,
}

impl LogisticObjective {
    pub fn new(x: DMatrix<f64>, labels: Vec<usize>, classes: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidObjective(format!("regularization {lambda} must be positive")));
        }
        if classes < 2 {
            return Err(Error::InvalidObjective("need at least two classes".into()));
        }
        if x.nrows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples with {} labels",
                x.nrows(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidObjective(format!("label {l} outside {classes} classes")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logistic features".into()));
        }
        let gram = x.transpose() * &x;
        let top = if gram.is_empty() { 0.0 } else { symmetric_extremes(&gram).1.max(0.0) };
        let mut obj = Self {
            x,
            labels,
            classes,
            lambda,
            smoothness: lambda + 0.5 * top,
            minimizer: DVector::zeros(0),
        };
        let dim = obj.dim();
        obj.minimizer = newton_minimize(
            dim,
            |w| obj.value(w),
            |w| obj.gradient(w),
            |w| obj.hessian(w),
            DVector::zeros(dim),
        )?;
        Ok(obj)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> usize {
        self.x.ncols()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.classes * self.x.ncols()
    }

    fn probabilities(&self, w: &DVector<f64>, row: usize) -> Vec<f64> {
        let p = self.features();
        let scores: Vec<f64> = (0..self.classes)
            .map(|c| (0..p).map(|f| w[c * p + f] * self.x[(row, f)]).sum())
            .collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    fn value(&self, w: &DVector<f64>) -> f64 {
        let p = self.features();
        let mut loss = 0.5 * self.lambda * w.norm_squared();
        for row in 0..self.x.nrows() {
            let scores: Vec<f64> = (0..self.classes)
                .map(|c| (0..p).map(|f| w[c * p + f] * self.x[(row, f)]).sum())
                .collect();
            let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + scores.iter().map(|s| (s - top).exp()).sum::<f64>().ln();
            loss += lse - scores[self.labels[row]];
        }
        loss
    }

    fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let p = self.features();
        let mut g = w * self.lambda;
        for row in 0..self.x.nrows() {
            let probs = self.probabilities(w, row);
            for c in 0..self.classes {
                let coef = probs[c] - f64::from(u8::from(c == self.labels[row]));
                for f in 0..p {
                    g[c * p + f] += coef * self.x[(row, f)];
                }
            }
        }
        g
    }

    fn hessian(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let p = self.features();
        let dim = self.dim();
        let mut h = DMatrix::identity(dim, dim) * self.lambda;
        for row in 0..self.x.nrows() {
            let probs = self.probabilities(w, row);
            for c in 0..self.classes {
                for c2 in 0..self.classes {
                    let s = if c == c2 { probs[c] } else { 0.0 } - probs[c] * probs[c2];
                    if s == 0.0 {
                        continue;
                    }
                    for f in 0..p {
                        let xf = self.x[(row, f)] * s;
                        for f2 in 0..p {
                            h[(c * p + f, c2 * p + f2)] += xf * self.x[(row, f2)];
                        }
                    }
                }
            }
        }
        h
    }
}

/// Any supported local objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Quadratic(QuadraticObjective),
    LeastSquares(LeastSquaresObjective),
    Logistic(LogisticObjective),
}

impl Objective {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Quadratic(_) => "quadratic",
            Self::LeastSquares(_) => "least_squares",
            Self::Logistic(_) => "logistic",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic(q) => q.dim(),
            Self::LeastSquares(l) => l.quadratic.dim(),
            Self::Logistic(l) => l.dim(),
        }
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} for objective of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("evaluation point".into()));
        }
        Ok(())
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            Self::Quadratic(q) => q.value(x),
            Self::LeastSquares(l) => l.value(x),
            Self::Logistic(l) => l.value(x),
        })
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x)?;
        Ok(match self {
            Self::Quadratic(q) => q.gradient(x),
            Self::LeastSquares(l) => l.gradient(x),
            Self::Logistic(l) => l.gradient(x),
        })
    }

    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(match self {
            Self::Quadratic(q) => q.a.to_dense(),
            Self::LeastSquares(l) => l.quadratic.a.to_dense(),
            Self::Logistic(l) => l.hessian(x),
        })
    }

    /// Exact eigenvalue extremes for quadratics; `mu = lambda` and
    /// `M = lambda + lambda_max(X^T X) / 2` for logistic.
    pub fn constants(&self) -> Constants {
        match self {
            Self::Quadratic(q) => q.constants,
            Self::LeastSquares(l) => l.quadratic.constants,
            Self::Logistic(l) => Constants {
                mu: l.lambda,
                m: l.smoothness,
            },
        }
    }

    pub fn local_minimizer(&self) -> DVector<f64> {
        match self {
            Self::Quadratic(q) => q.b.clone(),
            Self::LeastSquares(l) => l.quadratic.b.clone(),
            Self::Logistic(l) => l.minimizer.clone(),
        }
    }

    /// The quadratic form of this objective, if it has one.
    pub fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        match self {
            Self::Quadratic(q) => Some(q),
            Self::LeastSquares(l) => Some(&l.quadratic),
            Self::Logistic(_) => None,
        }
    }
}

impl From<QuadraticObjective> for Objective {
    fn from(q: QuadraticObjective) -> Self {
        Self::Quadratic(q)
    }
}

impl From<LeastSquaresObjective> for Objective {
    fn from(l: LeastSquaresObjective) -> Self {
        Self::LeastSquares(l)
    }
}

impl From<LogisticObjective> for Objective {
    fn from(l: LogisticObjective) -> Self {
        Self::Logistic(l)
    }
}

/// `mu = min_i mu_i`, `M = max_i M_i`.
pub fn global_constants(objs: &[Objective]) -> Constants {
    objs.iter().map(Objective::constants).fold(
        Constants {
            mu: f64::INFINITY,
            m: 0.0,
        },
        |acc, c| Constants {
            mu: acc.mu.min(c.mu),
            m: acc.m.max(c.m),
        },
    )
}

/// Minimizer of `sum_i f_i`.
pub fn global_minimizer(objs: &[Objective]) -> Result<DVector<f64>> {
    weighted_minimizer(objs, &vec![1.0; objs.len()])
}

/// Minimizer of `sum_i weights[i] f_i`. Quadratic families are solved
/// exactly; anything else goes through damped Newton to a gradient norm of
/// [`MINIMIZER_TOL`].
pub fn weighted_minimizer(objs: &[Objective], weights: &[f64]) -> Result<DVector<f64>> {
    if objs.is_empty() {
        return Err(Error::InvalidObjective("no objectives".into()));
    }
    if weights.len() != objs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} objectives",
            weights.len(),
            objs.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidObjective("weights must be nonnegative with positive sum".into()));
    }
    let d = objs[0].dim();
    if objs.iter().any(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch("objectives differ in dimension".into()));
    }

    let quads: Option<Vec<&QuadraticObjective>> = objs.iter().map(Objective::as_quadratic).collect();
    if let Some(quads) = quads {
        let all_diag = quads.iter().all(|q| matches!(q.a, Curvature::Diagonal(_)));
        if all_diag {
            let mut num = DVector::zeros(d);
            let mut den = DVector::zeros(d);
            for (q, &w) in quads.iter().zip(weights) {
                if let Curvature::Diagonal(a) = &q.a {
                    num += a.component_mul(&q.b) * w;
                    den += a * w;
                }
            }
            if den.iter().any(|&v| v <= 0.0) {
                return Err(Error::SingularSystem("weighted curvature has a zero entry".into()));
            }
            return Ok(num.component_div(&den));
        }
        let mut h = DMatrix::zeros(d, d);
        let mut rhs = DVector::zeros(d);
        for (q, &w) in quads.iter().zip(weights) {
            let a = q.a.to_dense();
            rhs += &a * &q.b * w;
            h += a * w;
        }
        return solve_spd(&h, &rhs);
    }

    // Normalized weights keep the stopping rule independent of scale.
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let weights = &weights[..];
    let start = DVector::zeros(d);
    newton_minimize(
        d,
        |x| objs.iter().zip(weights).map(|(o, w)| w * o.value(x).unwrap_or(f64::INFINITY)).sum(),
        |x| {
            let mut g = DVector::zeros(d);
            for (o, &w) in objs.iter().zip(weights) {
                if w > 0.0 {
                    g += o.gradient(x).expect("dimension checked") * w;
                }
            }
            g
        },
        |x| {
            let mut h = DMatrix::zeros(d, d);
            for (o, &w) in objs.iter().zip(weights) {
                if w > 0.0 {
                    h += o.hessian(x).expect("dimension checked") * w;
                }
            }
            h
        },
        start,
    )
}

fn solve_spd(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    a.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::SingularSystem("linear system could not be solved".into()))
}

fn newton_minimize(
    d: usize,
    value: impl Fn(&DVector<f64>) -> f64,
    gradient: impl Fn(&DVector<f64>) -> DVector<f64>,
    hessian: impl Fn(&DVector<f64>) -> DMatrix<f64>,
    start: DVector<f64>,
) -> Result<DVector<f64>> {
    let mut x = start;
    let mut fx = value(&x);
    for _ in 0..200 {
        let g = gradient(&x);
        let gnorm = g.norm();
        if gnorm <= MINIMIZER_TOL {
            return Ok(polish(x, gnorm, &gradient, &hessian));
        }
        let step = solve_spd(&hessian(&x), &g)?;
        let slope = g.dot(&step);
        if slope <= 64.0 * f64::EPSILON * fx.abs().max(1.0) {
            // Predicted decrease is below the value's resolution; Newton is
            // in its quadratic regime, so take the full step.
            x -= &step;
            fx = value(&x);
            continue;
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = &x - &step * t;
            let fc = value(&cand);
            if fc <= fx - 1e-4 * t * slope {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // Rounding plateau in the value: judge by the gradient instead.
            let cand = &x - &step;
            if gradient(&cand).norm() < gnorm {
                x = cand;
                fx = value(&x);
            } else {
                break;
            }
        }
    }
    let gnorm = gradient(&x).norm();
    if gnorm <= MINIMIZER_TOL {
        Ok(polish(x, gnorm, &gradient, &hessian))
    } else {
        Err(Error::SingularSystem(format!(
            "minimization stalled at gradient norm {gnorm:e} in dimension {d}"
        )))
    }
}

/// A few extra full Newton steps while they still shrink the gradient, so
/// two solves of the same problem agree to rounding.
fn polish(
    mut x: DVector<f64>,
    mut gnorm: f64,
    gradient: &impl Fn(&DVector<f64>) -> DVector<f64>,
    hessian: &impl Fn(&DVector<f64>) -> DMatrix<f64>,
) -> DVector<f64> {
    for _ in 0..4 {
        let g = gradient(&x);
        let Ok(step) = solve_spd(&hessian(&x), &g) else { break };
        let cand = &x - step;
        let cn = gradient(&cand).norm();
        if cn >= gnorm {
            break;
        }
        x = cand;
        gnorm = cn;
    }
    x
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal columns from the QR factor of a Gaussian matrix.
fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let q = gaussian_matrix(rows, cols, rng).qr().q();
    q.columns(0, cols).into_owned()
}

fn check_targets(condition_targets: &[f64]) -> Result<()> {
    match condition_targets.iter().find(|k| !(k.is_finite() && **k >= 1.0)) {
        Some(&bad) => Err(Error::InvalidTarget(bad)),
        None => Ok(()),
    }
}

/// Least-squares shares whose local curvature `A_i = Q_i diag(s) Q_i^T`
/// has a log-spaced spectrum from 1 to `condition_targets[i]`. Data are
/// built as `X_i = U_i diag(sqrt(D s / 2)) Q_i^T` with random orthonormal
/// `U_i` and `Q_i`, and targets `y_i = X_i w_i` for a random `w_i`, so each
/// agent's local minimizer is `w_i`.
pub fn generate_synthetic_partition(
    n: usize,
    d: usize,
    samples_per_agent: usize,
    condition_targets: &[f64],
    seed: u64,
) -> Result<Vec<Objective>> {
    if condition_targets.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} condition targets for {n} agents",
            condition_targets.len()
        )));
    }
    check_targets(condition_targets)?;
    if d == 0 || samples_per_agent < d {
        return Err(Error::InvalidObjective(format!(
            "need at least {d} samples per agent for full-rank local data"
        )));
    }
    let total = n * samples_per_agent;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objs = Vec::with_capacity(n);
    for &kappa in condition_targets {
        let spectrum = logspace(1.0, kappa, d);
        let q = random_orthonormal(d, d, &mut rng);
        let u = random_orthonormal(samples_per_agent, d, &mut rng);
        let s = DVector::from_iterator(d, spectrum.iter().map(|l| (l * total as f64 / 2.0).sqrt()));
        let x = u * DMatrix::from_diagonal(&s) * q.transpose();
        let w: DVector<f64> = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let y = &x * w;
        objs.push(LeastSquaresObjective::new(x, y, total)?.into());
    }
    Ok(objs)
}

/// Dense quadratics `A_i = Q_i diag(s) Q_i^T` with a log-spaced spectrum
/// from 1 to `condition_targets[i]` and Gaussian centers.
pub fn synthetic_quadratics(d: usize, condition_targets: &[f64], seed: u64) -> Result<Vec<Objective>> {
    check_targets(condition_targets)?;
    if d == 0 {
        return Err(Error::InvalidObjective("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objs = Vec::with_capacity(condition_targets.len());
    for &kappa in condition_targets {
        let spectrum = DVector::from_vec(logspace(1.0, kappa, d));
        let q = random_orthonormal(d, d, &mut rng);
        let mut a = &q * DMatrix::from_diagonal(&spectrum) * q.transpose();
        a = (&a + a.transpose()) * 0.5;
        let b: DVector<f64> = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        objs.push(QuadraticObjective::new(a, b)?.into());
    }
    Ok(objs)
}

/// Small multinomial problems: Gaussian features, labels from a random
/// linear teacher with Gaussian score noise.
pub fn synthetic_logistic(
    n: usize,
    samples_per_agent: usize,
    features: usize,
    classes: usize,
    lambda: f64,
    seed: u64,
) -> Result<Vec<Objective>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let teacher = gaussian_matrix(classes, features, &mut rng);
    let mut objs = Vec::with_capacity(n);
    for _ in 0..n {
        let x = gaussian_matrix(samples_per_agent, features, &mut rng);
        let scores = &x * teacher.transpose();
        let labels = (0..samples_per_agent)
            .map(|r| {
                (0..classes)
                    .map(|c| {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        (c, scores[(r, c)] + noise)
                    })
                    .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0
            })
            .collect();
        objs.push(LogisticObjective::new(x, labels, classes, lambda)?.into());
    }
    Ok(objs)
}
