//! Dense kernels shared by the projection, solver and analysis code.

use nalgebra::{DMatrix, DVector};

/// Relative change in the Rayleigh quotient at which power iteration stops.
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITERS: usize = 10_000;

/// Largest singular value of `m` by power iteration on `mᵀm` (or `mmᵀ`,
/// whichever is smaller), starting from the normalized all-ones vector.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    if rows >= cols {
        let mut tmp = DVector::zeros(rows);
        operator_norm(cols, |v, out| {
            tmp.gemv(1.0, m, v, 0.0);
            out.gemv_tr(1.0, m, &tmp, 0.0);
        })
    } else {
        let mut tmp = DVector::zeros(cols);
        operator_norm(rows, |v, out| {
            tmp.gemv_tr(1.0, m, v, 0.0);
            out.gemv(1.0, m, &tmp, 0.0);
        })
    }
}

/// `sqrt(lambda_max)` of a symmetric positive semi-definite operator given
/// as a closure `gram(v, out)` computing `out = Gv` (typically `G = TᵀT`, so
/// the result is `‖T‖₂`).
pub fn operator_norm(dim: usize, mut gram: impl FnMut(&DVector<f64>, &mut DVector<f64>)) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut v = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut w = DVector::zeros(dim);
    let mut lambda = 0.0f64;
    for _ in 0..POWER_MAX_ITERS {
        gram(&v, &mut w);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            return next.max(0.0).sqrt();
        }
        let converged = (next - lambda).abs() <= POWER_TOL * next.abs();
        lambda = next;
        if converged {
            break;
        }
        v.copy_from(&w);
        v /= norm;
    }
    lambda.max(0.0).sqrt()
}

/// Spectral norm of a symmetric matrix through its eigenvalues; the input is
/// symmetrized first so tiny rounding asymmetries do not matter.
pub fn symmetric_norm(s: &DMatrix<f64>) -> f64 {
    let sym = (s + s.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
}

/// All singular values, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Smallest singular value exceeding `1e-10 * ‖A‖₂`.
pub fn sigma_min_nonzero(a: &DMatrix<f64>) -> f64 {
    let s = singular_values(a);
    let Some(&top) = s.first() else {
        return 0.0;
    };
    s.iter()
        .copied()
        .filter(|&v| v > 1e-10 * top)
        .fold(f64::INFINITY, f64::min)
        .min(top)
}

/// Maximum absolute column sum.
pub fn norm_one(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Orthonormal basis of the null space of `a` (columns), from the SVD of
/// `aᵀ` padded to a square matrix. Rank is judged at `1e-10 * ‖A‖₂`.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (n, m)).copy_from(&a.transpose());
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.iter().fold(0.0f64, |acc, &s| acc.max(s));
    let cols: Vec<usize> = (0..n)
        .filter(|&i| svd.singular_values[i] <= 1e-10 * top.max(f64::MIN_POSITIVE))
        .collect();
    DMatrix::from_fn(n, cols.len(), |r, c| u[(r, cols[c])])
}

/// Numerical rank at relative threshold `1e-10`.
pub fn rank(a: &DMatrix<f64>) -> usize {
    let s = singular_values(a);
    let Some(&top) = s.first() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > 1e-10 * top).count()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
