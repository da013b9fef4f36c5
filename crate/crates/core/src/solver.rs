//! Projected generalized gradient solvers and the greedy / reweighted
//! baselines.
//!
//! PGG and APGG share one iteration,
//!
//! ```text
//! x~    = x - kappa * grad J(x)
//! x_new = x~ + AᵀB (y - A x~)          ( = AᵀB y + (I - AᵀBA) x~ )
//! ```
//!
//! started at `x(0) = AᵀB y`. With the exact pseudo-inverse the second line
//! is the Euclidean projection onto `{x : Ax = y}`; with a Ben-Israel factor
//! it is the uniform approximate projection. Each step costs two
//! matrix-vector products with `M x N` matrices; `I - AᵀBA` is never formed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::penalty::Penalty;
use crate::pinv::SensingModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kappa: f64,
    pub max_iters: usize,
    /// Stop once `‖x(n+1) - x(n)‖₂ < early_stop_tol`; `0` disables.
    #[serde(default)]
    pub early_stop_tol: f64,
    /// Record a [`TraceRecord`] every this many iterations; `0` disables.
    #[serde(default)]
    pub trace_every: usize,
}

impl SolverConfig {
    pub fn new(kappa: f64, max_iters: usize) -> Self {
        SolverConfig {
            kappa,
            max_iters,
            early_stop_tol: 0.0,
            trace_every: 0,
        }
    }

    pub fn with_trace(self, every: usize) -> Self {
        SolverConfig {
            trace_every: every,
            ..self
        }
    }

    pub fn with_early_stop(self, tol: f64) -> Self {
        SolverConfig {
            early_stop_tol: tol,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Invalid(format!("kappa must be positive, got {}", self.kappa)));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be at least 1".into()));
        }
        if !(self.early_stop_tol >= 0.0) {
            return Err(Error::Invalid("early_stop_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Diagnostics for iterate `x(iter)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// `‖x(n) - x*‖₂`, when the truth is known.
    pub error: Option<f64>,
    /// `‖A(x(n) - x*)‖₂`, when the truth is known.
    pub a_error: Option<f64>,
    /// `‖y - Ax(n)‖₂`.
    pub residual: f64,
    /// `J(x(n))`.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: DVector<f64>,
    pub iters_run: usize,
    pub final_residual: f64,
    pub trace: Option<Vec<TraceRecord>>,
}

fn check_measurement(model: &SensingModel, y: &DVector<f64>) -> Result<()> {
    if y.len() != model.rows() {
        return Err(Error::Dimension(format!(
            "measurement has length {}, sensing matrix has {} rows",
            y.len(),
            model.rows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("measurement has non-finite entries".into()));
    }
    Ok(())
}

fn residual_norm(a: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let mut r = y.clone();
    r.gemv(-1.0, a, x, 1.0);
    r.norm()
}

/// PGG with the exact projection.
pub fn pgg_solve(
    model: &SensingModel,
    pen: &Penalty,
    y: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    if !model.is_exact() {
        return Err(Error::Invalid("pgg_solve needs an exact pseudo-inverse".into()));
    }
    projected_solve(model, pen, y, cfg, None)
}

/// APGG with a Ben-Israel (or other explicit) factor `B`.
pub fn apgg_solve(
    model: &SensingModel,
    pen: &Penalty,
    y: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    if model.is_exact() {
        return Err(Error::Invalid("apgg_solve needs an approximate pseudo-inverse".into()));
    }
    if !(model.zeta < 1.0) {
        return Err(Error::Invalid(format!("approximate projection must have zeta < 1, got {}", model.zeta)));
    }
    projected_solve(model, pen, y, cfg, None)
}

/// `x(0) = AᵀB y`.
pub fn initial_point(model: &SensingModel, y: &DVector<f64>) -> DVector<f64> {
    model.apply_pinv(y)
}

/// Workspace for repeated steps over one model.
struct Stepper<'a> {
    model: &'a SensingModel,
    pen: &'a Penalty,
    kappa: f64,
    grad: DVector<f64>,
    resid: DVector<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a SensingModel, pen: &'a Penalty, kappa: f64) -> Self {
        Stepper {
            model,
            pen,
            kappa,
            grad: DVector::zeros(model.cols()),
            resid: DVector::zeros(model.rows()),
        }
    }

    /// In place: `x <- x~ + AᵀB (y - A x~)`.
    #[inline]
    fn step(&mut self, x: &mut DVector<f64>, y: &DVector<f64>) {
        self.pen.j_grad_into(x.as_slice(), self.grad.as_mut_slice());
        x.axpy(-self.kappa, &self.grad, 1.0);
        self.resid.copy_from(y);
        self.resid.gemv(-1.0, self.model.a(), x, 1.0);
        x.gemv(1.0, self.model.pinv(), &self.resid, 1.0);
    }
}

/// One PGG/APGG update from `x`.
pub fn projected_step(
    model: &SensingModel,
    pen: &Penalty,
    y: &DVector<f64>,
    x: &DVector<f64>,
    kappa: f64,
) -> DVector<f64> {
    let mut out = x.clone();
    Stepper::new(model, pen, kappa).step(&mut out, y);
    out
}

/// Runs the projected iteration in whatever projection mode `model` carries.
/// When `truth` is given, trace records also report the distance to it.
pub fn projected_solve(
    model: &SensingModel,
    pen: &Penalty,
    y: &DVector<f64>,
    cfg: &SolverConfig,
    truth: Option<&DVector<f64>>,
) -> Result<RecoveryResult> {
    cfg.validate()?;
    pen.validate()?;
    check_measurement(model, y)?;
    if let Some(t) = truth {
        if t.len() != model.cols() {
            return Err(Error::Dimension("truth length differs from signal length".into()));
        }
    }
    let a = model.a();
    let record = |iter: usize, x: &DVector<f64>| {
        let residual = residual_norm(a, x, y);
        let (error, a_error) = match truth {
            Some(t) => {
                let diff = x - t;
                (Some(diff.norm()), Some((a * &diff).norm()))
            }
            None => (None, None),
        };
        TraceRecord {
            iter,
            error,
            a_error,
            residual,
            objective: pen.j_eval(x.as_slice()),
        }
    };

    let mut x = initial_point(model, y);
    let mut trace = (cfg.trace_every > 0).then(|| vec![record(0, &x)]);
    let mut stepper = Stepper::new(model, pen, cfg.kappa);
    let mut prev = DVector::zeros(if cfg.early_stop_tol > 0.0 { x.len() } else { 0 });
    let mut iters_run = 0;
    for n in 1..=cfg.max_iters {
        if cfg.early_stop_tol > 0.0 {
            prev.copy_from(&x);
        }
        stepper.step(&mut x, y);
        iters_run = n;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { iteration: n });
        }
        if let Some(tr) = trace.as_mut() {
            if n % cfg.trace_every == 0 {
                tr.push(record(n, &x));
            }
        }
        if cfg.early_stop_tol > 0.0 && dist(x.as_slice(), prev.as_slice()) < cfg.early_stop_tol {
            break;
        }
    }
    if let Some(tr) = trace.as_mut() {
        if tr.last().map(|r| r.iter) != Some(iters_run) {
            tr.push(record(iters_run, &x));
        }
    }
    Ok(RecoveryResult {
        final_residual: residual_norm(a, &x, y),
        x_hat: x,
        iters_run,
        trace,
    })
}

/// `l1` minimization as PGG with the absolute-value penalty.
pub fn l1_solve(model: &SensingModel, y: &DVector<f64>, cfg: &SolverConfig) -> Result<RecoveryResult> {
    projected_solve(model, &Penalty::abs(), y, cfg, None)
}

/// Iteration count after which APGG is guaranteed inside its error ball:
/// `ceil(4 C3 M0 / (d alpha² N kappa))`.
pub fn default_max_iters(c3: f64, m0: f64, d: f64, alpha: f64, n: usize, kappa: f64) -> u64 {
    let bound = 4.0 * c3 * m0 / (d * alpha * alpha * n as f64 * kappa);
    if bound.is_finite() {
        bound.ceil().max(0.0) as u64
    } else {
        u64::MAX
    }
}

/// Orthogonal matching pursuit with `k` greedy rounds.
///
/// Columns are compared by normalized correlation `|a_jᵀ r| / ‖a_j‖`, ties
/// go to the lowest index, and every round re-fits least squares on the
/// active set.
pub fn omp_solve(a: &DMatrix<f64>, y: &DVector<f64>, k: usize) -> Result<RecoveryResult> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::Dimension(format!("y has length {}, A has {m} rows", y.len())));
    }
    if k == 0 || k > m {
        return Err(Error::Invalid(format!("sparsity must lie in 1..={m}, got {k}")));
    }
    let col_norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let y_norm = y.norm();
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut coef = DVector::zeros(0);
    let mut residual = y.clone();
    let mut rounds = 0;
    for _ in 0..k {
        if residual.norm() <= 1e-14 * y_norm || y_norm == 0.0 {
            break;
        }
        let corr = a.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if col_norms[j] == 0.0 || support.contains(&j) {
                continue;
            }
            let score = corr[j].abs() / col_norms[j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        support.push(j);
        let sub = a.select_columns(&support);
        let svd = sub.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(Error::DegenerateSupport);
        }
        coef = svd.solve(y, 0.0).map_err(|_| Error::DegenerateSupport)?;
        residual = y - &sub * &coef;
        rounds += 1;
    }
    let mut x_hat = DVector::zeros(n);
    for (i, &j) in support.iter().enumerate() {
        x_hat[j] = coef[i];
    }
    Ok(RecoveryResult {
        final_residual: residual_norm(a, &x_hat, y),
        x_hat,
        iters_run: rounds,
        trace: None,
    })
}

/// The default annealing schedule `1e-1, 1e-2, ..., 1e-8`.
pub fn default_eps_schedule() -> Vec<f64> {
    (1..=8).map(|e| 10f64.powi(-e)).collect()
}

pub const DEFAULT_IRLS_INNER: usize = 10;

/// Iteratively reweighted least squares for `lp`,
/// `x <- W Aᵀ (A W Aᵀ)⁻¹ y` with `w_i = (x_i² + eps)^(1 - p/2)`.
pub fn irls_solve(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    p: f64,
    eps_schedule: &[f64],
    inner_iters: usize,
) -> Result<RecoveryResult> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::Dimension(format!("y has length {}, A has {m} rows", y.len())));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Invalid(format!("p must lie in [0, 1], got {p}")));
    }
    if eps_schedule.is_empty() || eps_schedule.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Invalid("eps schedule must be nonempty and positive".into()));
    }
    let solve_weighted = |w: &DVector<f64>| -> Result<DVector<f64>> {
        let aw = DMatrix::from_fn(m, n, |i, j| a[(i, j)] * w[j]);
        let gram = &aw * a.transpose();
        let z = gram.cholesky().ok_or(Error::SingularReweighted)?.solve(y);
        let x = aw.tr_mul(&z);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularReweighted);
        }
        Ok(x)
    };
    let mut x = solve_weighted(&DVector::from_element(n, 1.0))?;
    let mut iters = 0;
    for &eps in eps_schedule {
        for _ in 0..inner_iters {
            let w = x.map(|v| (v * v + eps).powf(1.0 - p / 2.0));
            x = solve_weighted(&w)?;
            iters += 1;
        }
    }
    Ok(RecoveryResult {
        final_residual: residual_norm(a, &x, y),
        x_hat: x,
        iters_run: iters,
        trace: None,
    })
}

/// `‖x - x*‖₂` helper for slices.
pub fn error_norm(x: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    dist(x.as_slice(), truth.as_slice())
}
