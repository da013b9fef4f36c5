//! Exact and iterative pseudo-inverses of a wide sensing matrix.
//!
//! Every pseudo-inverse here has the form `AᵀB` with `B` an `M x M`
//! approximation of `(AAᵀ)⁻¹`. Two spectral quantities describe how good it
//! is and are measured rather than bounded:
//!
//! * `zeta = ‖I - AAᵀB‖₂` (zero for the exact inverse),
//! * `d = ‖I - AᵀBA‖₂²`.
//!
//! The iterative variant is the Ben-Israel recursion
//! `Y_k = Y_{k-1}(2I - AY_{k-1})` started at `Y_0 = s Aᵀ`. Since every
//! `Y_k` is `Aᵀ` times a polynomial in `AAᵀ`, the recursion is carried on the
//! `M x M` factor instead: `G_0 = sI`, `G_k = G_{k-1}(2I - AAᵀ G_{k-1})`,
//! so `Y_k = AᵀG_k` and `I - AAᵀG_k = (I - AAᵀG_{k-1})²`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Default starting scale is `BEN_ISRAEL_SCALE / ‖AAᵀ‖₁`. Any value in
/// `(0, 2)` contracts; this one sits just inside the admissible interval.
pub const BEN_ISRAEL_SCALE: f64 = 1.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProjMode {
    Exact,
    Approx { steps: usize },
}

/// Sensing matrix together with its (approximate) pseudo-inverse and the
/// spectral quantities consumed by the solvers and the constant calculus.
#[derive(Debug, Clone)]
pub struct SensingModel {
    a: DMatrix<f64>,
    mode: ProjMode,
    b: DMatrix<f64>,
    pinv: DMatrix<f64>,
    pub zeta: f64,
    pub d: f64,
    pub sigma_min: f64,
    pub norm_a: f64,
    pub norm_b: f64,
}

/// Precision after one Ben-Israel step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub k: usize,
    pub zeta: f64,
    pub d: f64,
}

fn check_shape(a: &DMatrix<f64>) -> Result<()> {
    let (m, n) = a.shape();
    if m == 0 || m > n {
        return Err(Error::Dimension(format!("sensing matrix must be wide, got {m}x{n}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("sensing matrix has non-finite entries".into()));
    }
    Ok(())
}

/// `‖I - AᵀBA‖₂²` without forming the `N x N` matrix.
fn measure_d(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (m, n) = a.shape();
    let bt = b.transpose();
    let mut av = DVector::zeros(m);
    let mut bav = DVector::zeros(m);
    let mut tv = DVector::zeros(n);
    let norm = linalg::operator_norm(n, |v, out| {
        // tv = (I - AᵀBA) v
        av.gemv(1.0, a, v, 0.0);
        bav.gemv(1.0, b, &av, 0.0);
        tv.copy_from(v);
        tv.gemv_tr(-1.0, a, &bav, 1.0);
        // out = (I - AᵀBᵀA) tv
        av.gemv(1.0, a, &tv, 0.0);
        bav.gemv(1.0, &bt, &av, 0.0);
        out.copy_from(&tv);
        out.gemv_tr(-1.0, a, &bav, 1.0);
    });
    norm * norm
}

fn residual_operator(gram: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = gram.nrows();
    DMatrix::identity(m, m) - gram * b
}

impl SensingModel {
    /// Exact pseudo-inverse `Aᵀ(AAᵀ)⁻¹`.
    pub fn exact(a: DMatrix<f64>) -> Result<Self> {
        check_shape(&a)?;
        let gram = &a * a.transpose();
        let eig = gram.clone().symmetric_eigenvalues();
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
        if !(lo > 1e-12 * hi) {
            return Err(Error::SingularGram);
        }
        let b = gram.clone().cholesky().ok_or(Error::SingularGram)?.inverse();
        // zeta is zero by definition here; a large rounding residual means
        // the Gram matrix is too ill-conditioned to invert
        if linalg::symmetric_norm(&residual_operator(&gram, &b)) > 1e-8 {
            return Err(Error::SingularGram);
        }
        Ok(Self::assemble(a, b, ProjMode::Exact, 0.0))
    }

    /// Ben-Israel approximation after `k` refinement steps with the default
    /// starting scale.
    pub fn ben_israel(a: DMatrix<f64>, k: usize) -> Result<Self> {
        Self::ben_israel_scaled(a, k, BEN_ISRAEL_SCALE)
    }

    /// Ben-Israel approximation with `Y_0 = (scale / ‖AAᵀ‖₁) Aᵀ`.
    pub fn ben_israel_scaled(a: DMatrix<f64>, k: usize, scale: f64) -> Result<Self> {
        check_shape(&a)?;
        let gram = &a * a.transpose();
        let g = ben_israel_factor(&gram, k, scale)?;
        let zeta = linalg::symmetric_norm(&residual_operator(&gram, &g));
        Ok(Self::assemble(a, g, ProjMode::Approx { steps: k }, zeta))
    }

    /// Wraps an explicit factor `B` as an approximate model.
    pub fn with_factor(a: DMatrix<f64>, b: DMatrix<f64>, steps: usize) -> Result<Self> {
        check_shape(&a)?;
        let m = a.nrows();
        if b.shape() != (m, m) {
            return Err(Error::Dimension(format!("B must be {m}x{m}, got {:?}", b.shape())));
        }
        let gram = &a * a.transpose();
        let zeta = linalg::spectral_norm(&residual_operator(&gram, &b));
        Ok(Self::assemble(a, b, ProjMode::Approx { steps }, zeta))
    }

    fn assemble(a: DMatrix<f64>, b: DMatrix<f64>, mode: ProjMode, zeta: f64) -> Self {
        let pinv = a.transpose() * &b;
        let d = measure_d(&a, &b);
        let sigma_min = linalg::sigma_min_nonzero(&a);
        let norm_a = linalg::spectral_norm(&a);
        let norm_b = linalg::spectral_norm(&b);
        SensingModel {
            a,
            mode,
            b,
            pinv,
            zeta,
            d,
            sigma_min,
            norm_a,
            norm_b,
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// The `N x M` matrix `AᵀB`.
    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn mode(&self) -> ProjMode {
        self.mode
    }

    pub fn is_exact(&self) -> bool {
        self.mode == ProjMode::Exact
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// `AᵀB y`.
    pub fn apply_pinv(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.pinv * y
    }
}

/// `G_k` for the Gram matrix `AAᵀ`.
pub fn ben_israel_factor(gram: &DMatrix<f64>, k: usize, scale: f64) -> Result<DMatrix<f64>> {
    let mut g = DMatrix::zeros(0, 0);
    ben_israel_steps(gram, k, scale, |_, gk| g = gk.clone())?;
    Ok(g)
}

fn ben_israel_steps(
    gram: &DMatrix<f64>,
    k: usize,
    scale: f64,
    mut visit: impl FnMut(usize, &DMatrix<f64>),
) -> Result<()> {
    if !(scale > 0.0 && scale < 2.0) {
        return Err(Error::Invalid(format!("Ben-Israel scale must lie in (0, 2), got {scale}")));
    }
    let m = gram.nrows();
    let n1 = linalg::norm_one(gram);
    if n1 == 0.0 {
        return Err(Error::SingularGram);
    }
    let two_i = DMatrix::<f64>::identity(m, m) * 2.0;
    let mut g = DMatrix::<f64>::identity(m, m) * (scale / n1);
    visit(0, &g);
    for step in 1..=k {
        let inner = &two_i - gram * &g;
        g = &g * inner;
        // G stays a polynomial in the symmetric Gram matrix
        g = (&g + g.transpose()) * 0.5;
        visit(step, &g);
    }
    Ok(())
}

/// `zeta_k` and `d_k` for `k = 0..=steps`, sharing one recursion.
pub fn ben_israel_report(a: &DMatrix<f64>, steps: usize, scale: f64) -> Result<Vec<StepReport>> {
    check_shape(a)?;
    let gram = a * a.transpose();
    let mut out = Vec::with_capacity(steps + 1);
    ben_israel_steps(&gram, steps, scale, |k, g| {
        out.push(StepReport {
            k,
            zeta: linalg::symmetric_norm(&residual_operator(&gram, g)),
            d: measure_d(a, g),
        });
    })?;
    Ok(out)
}

/// `zeta_k` for `k = 0..=steps` only (cheaper than [`ben_israel_report`]).
pub fn ben_israel_zetas(a: &DMatrix<f64>, steps: usize, scale: f64) -> Result<Vec<f64>> {
    check_shape(a)?;
    let gram = a * a.transpose();
    let mut out = Vec::with_capacity(steps + 1);
    ben_israel_steps(&gram, steps, scale, |_, g| {
        out.push(linalg::symmetric_norm(&residual_operator(&gram, g)));
    })?;
    Ok(out)
}
