//! Small-instance oracles: null space constants, the `l0` certificate,
//! brute-force `J`-minimization and an LP for basis pursuit.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::rng_from_seed;
use crate::linalg;
use crate::penalty::Penalty;

/// Enumeration budget of the exact `l1` null space constant.
pub const NSC_MAX_N: usize = 14;
pub const NSC_MAX_NULLITY: usize = 8;
pub const NSC_MAX_K: usize = 4;
/// Upper limit on `C(N, 2K)` for the `l0` certificate.
pub const L0_MAX_SUBSETS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NscEstimate {
    pub value: f64,
    pub k: usize,
    /// True only for full enumeration.
    pub exact: bool,
    /// Null-space vectors examined (sampling probe only).
    pub samples: usize,
    /// A null-space vector attaining `value`, when finite.
    pub argmax: Option<DVector<f64>>,
}

/// All size-`k` subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64) / (i as u64 + 1))
}

fn check_nsc_budget(a: &DMatrix<f64>, k: usize, nullity: usize) -> Result<()> {
    let n = a.ncols();
    if n > NSC_MAX_N || nullity > NSC_MAX_NULLITY || k > NSC_MAX_K {
        return Err(Error::OracleBudget(format!(
            "N = {n} (max {NSC_MAX_N}), nullity = {nullity} (max {NSC_MAX_NULLITY}), K = {k} (max {NSC_MAX_K})"
        )));
    }
    Ok(())
}

/// `max s·z_S` over null-space `z = Zw` with `‖z_{S^c}‖₁ <= 1`.
/// `None` means unbounded.
fn nsc_lp(z: &DMatrix<f64>, support: &[usize], signs: &[f64]) -> Result<Option<(f64, DVector<f64>)>> {
    let (n, dim) = z.shape();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let w: Vec<_> = (0..dim)
        .map(|c| {
            let obj: f64 = support.iter().zip(signs).map(|(&i, &s)| s * z[(i, c)]).sum();
            lp.add_var(obj, (f64::NEG_INFINITY, f64::INFINITY))
        })
        .collect();
    let mut total = LinearExpr::empty();
    for j in (0..n).filter(|j| !support.contains(j)) {
        let u = lp.add_var(0.0, (0.0, f64::INFINITY));
        for sign in [1.0, -1.0] {
            let mut e = LinearExpr::empty();
            e.add(u, 1.0);
            for (c, &wc) in w.iter().enumerate() {
                e.add(wc, -sign * z[(j, c)]);
            }
            lp.add_constraint(e, ComparisonOp::Ge, 0.0);
        }
        total.add(u, 1.0);
    }
    lp.add_constraint(total, ComparisonOp::Le, 1.0);
    match lp.solve() {
        Ok(sol) => {
            let coeffs = DVector::from_iterator(dim, w.iter().map(|&v| *sol.var_value(v)));
            Ok(Some((sol.objective(), z * coeffs)))
        }
        Err(minilp::Error::Unbounded) => Ok(None),
        Err(e) => Err(Error::Lp(e.to_string())),
    }
}

/// Exact `gamma(l1, A, K)` by enumerating every support of size at most `K`
/// and every sign pattern on it, each solved as a linear program over the
/// null-space coordinates. Sign patterns are taken up to global sign, since
/// `z` and `-z` are both in the null space.
pub fn nsc_l1_exact(a: &DMatrix<f64>, k: usize) -> Result<NscEstimate> {
    let n = a.ncols();
    if k == 0 {
        return Ok(NscEstimate { value: 0.0, k, exact: true, samples: 0, argmax: None });
    }
    let z = linalg::null_space(a);
    check_nsc_budget(a, k, z.ncols())?;
    let mut best = NscEstimate { value: 0.0, k, exact: true, samples: 0, argmax: None };
    if z.ncols() == 0 {
        return Ok(best);
    }
    for size in 1..=k.min(n) {
        for support in combinations(n, size) {
            // a null vector vanishing on S^c makes the ratio unbounded; with
            // full column rank on S^c the feasible region is compact
            let rest: Vec<usize> = (0..n).filter(|j| !support.contains(j)).collect();
            if linalg::rank(&z.select_rows(&rest)) < z.ncols() {
                best.value = f64::INFINITY;
                best.argmax = None;
                return Ok(best);
            }
            for pattern in 0..(1u32 << (size - 1)) {
                let signs: Vec<f64> = (0..size)
                    .map(|b| if b > 0 && pattern & (1 << (b - 1)) != 0 { -1.0 } else { 1.0 })
                    .collect();
                match nsc_lp(&z, &support, &signs)? {
                    None => {
                        best.value = f64::INFINITY;
                        best.argmax = None;
                        return Ok(best);
                    }
                    Some((v, zvec)) if v > best.value => {
                        best.value = v;
                        best.argmax = Some(zvec);
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(best)
}

/// Same quantity by vertex enumeration, without any LP: the maximum of the
/// convex ratio `‖z_S‖₁ / ‖z_{S^c}‖₁` over the null space is attained where
/// `dim - 1` entries of `z_{S^c}` vanish. Practical for nullity up to 3.
pub fn nsc_l1_vertex(a: &DMatrix<f64>, k: usize) -> Result<NscEstimate> {
    let n = a.ncols();
    let z = linalg::null_space(a);
    let dim = z.ncols();
    check_nsc_budget(a, k, dim)?;
    if dim > 3 {
        return Err(Error::OracleBudget(format!("vertex enumeration needs nullity <= 3, got {dim}")));
    }
    let mut best = NscEstimate { value: 0.0, k, exact: true, samples: 0, argmax: None };
    if dim == 0 || k == 0 {
        return Ok(best);
    }
    for size in 1..=k.min(n) {
        for support in combinations(n, size) {
            let rest: Vec<usize> = (0..n).filter(|j| !support.contains(j)).collect();
            // a null vector vanishing on all of S^c gives an unbounded ratio
            let zr = z.select_rows(&rest);
            if linalg::rank(&zr) < dim {
                best.value = f64::INFINITY;
                best.argmax = None;
                return Ok(best);
            }
            for active in combinations(rest.len(), dim - 1) {
                let rows: Vec<usize> = active.iter().map(|&i| rest[i]).collect();
                let sub = z.select_rows(&rows);
                let w = if dim == 1 {
                    DVector::from_element(1, 1.0)
                } else {
                    let ker = linalg::null_space(&sub);
                    if ker.ncols() != 1 {
                        continue;
                    }
                    ker.column(0).into_owned()
                };
                let zv = &z * w;
                let den: f64 = rest.iter().map(|&j| zv[j].abs()).sum();
                if den <= 1e-14 * zv.amax() {
                    continue;
                }
                let num: f64 = support.iter().map(|&i| zv[i].abs()).sum();
                let ratio = num / den;
                if ratio > best.value {
                    best.value = ratio;
                    best.argmax = Some(zv);
                }
            }
        }
    }
    Ok(best)
}

/// `J(beta z_S) / J(beta z_{S^c})` with `S` the `k` largest magnitudes of
/// `z`, which maximizes the ratio over supports of size at most `k`.
fn j_ratio(pen: &Penalty, z: &DVector<f64>, k: usize, beta: f64) -> f64 {
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_by(|x, y| y.total_cmp(x));
    let k = k.min(mags.len());
    let num: f64 = mags[..k].iter().map(|&t| pen.eval(beta * t)).sum();
    let den: f64 = mags[k..].iter().map(|&t| pen.eval(beta * t)).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Lower bound on `gamma(J, A, K)` from `samples` random null-space
/// vectors plus any `extra` candidates, over the `beta` grid.
pub fn nsc_j_lower_probe(
    a: &DMatrix<f64>,
    k: usize,
    pen: &Penalty,
    beta_grid: &[f64],
    samples: usize,
    seed: u64,
    extra: &[DVector<f64>],
) -> Result<NscEstimate> {
    if beta_grid.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::Invalid("beta grid must be positive".into()));
    }
    let z = linalg::null_space(a);
    let dim = z.ncols();
    let mut best = NscEstimate { value: 0.0, k, exact: false, samples: 0, argmax: None };
    if dim == 0 || k == 0 {
        return Ok(best);
    }
    let mut rng = rng_from_seed(seed);
    let sampled = (0..samples).map(|_| {
        let w = DVector::<f64>::from_fn(dim, |_, _| rng.sample(StandardNormal));
        &z * w
    });
    let candidates: Vec<DVector<f64>> = extra.iter().cloned().chain(sampled).collect();
    for cand in candidates {
        if cand.len() != a.ncols() {
            return Err(Error::Dimension("probe vector length differs from N".into()));
        }
        best.samples += 1;
        for &beta in beta_grid {
            let r = j_ratio(pen, &cand, k, beta);
            if r > best.value {
                best.value = r;
                best.argmax = Some(cand.clone());
            }
        }
    }
    Ok(best)
}

/// `gamma(l0, A, K) < 1`: `M >= 2K + 1` and every `2K` columns are
/// linearly independent.
pub fn gamma_l0_certify(a: &DMatrix<f64>, k: usize) -> Result<bool> {
    let (m, n) = a.shape();
    if m < 2 * k + 1 {
        return Ok(false);
    }
    if 2 * k > n {
        return Ok(false);
    }
    let count = binomial(n, 2 * k);
    if count > L0_MAX_SUBSETS {
        return Err(Error::OracleBudget(format!("C({n}, {}) = {count} subsets", 2 * k)));
    }
    let scale = linalg::spectral_norm(a);
    if scale == 0.0 {
        return Ok(k == 0);
    }
    for cols in combinations(n, 2 * k) {
        let sub = a.select_columns(&cols);
        let smin = sub.singular_values().min();
        if !(smin > 1e-10 * scale) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Grid over the affine feasible set `{x_p + Z w}` in null-space
/// coordinates `w`, centered at the minimum-norm solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radius: f64,
    pub points: usize,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 201;

    /// Radius `2‖x*‖∞`, 201 points per axis.
    pub fn for_truth(x_star: &DVector<f64>) -> Self {
        GridSpec {
            radius: 2.0 * x_star.amax(),
            points: Self::DEFAULT_POINTS,
        }
    }

    /// Spacing between neighbouring grid points along an axis.
    pub fn resolution(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            2.0 * self.radius / (self.points - 1) as f64
        }
    }

    fn coord(&self, i: usize) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            -self.radius + self.resolution() * i as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JminResult {
    pub x: DVector<f64>,
    pub objective: f64,
    pub resolution: f64,
}

pub const JMIN_MAX_N: usize = 6;
pub const JMIN_MAX_NULLITY: usize = 3;

/// Grid search for `argmin J(x)` subject to `Ax = y` on tiny instances.
pub fn jmin_bruteforce(a: &DMatrix<f64>, y: &DVector<f64>, pen: &Penalty, grid: &GridSpec) -> Result<JminResult> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::Dimension(format!("y has length {}, A has {m} rows", y.len())));
    }
    let z = linalg::null_space(a);
    let dim = z.ncols();
    if n > JMIN_MAX_N || dim > JMIN_MAX_NULLITY {
        return Err(Error::OracleBudget(format!(
            "N = {n} (max {JMIN_MAX_N}), nullity = {dim} (max {JMIN_MAX_NULLITY})"
        )));
    }
    if grid.points == 0 || !(grid.radius >= 0.0) {
        return Err(Error::Invalid("grid needs at least one point and a nonnegative radius".into()));
    }
    let svd = a.clone().svd(true, true);
    let xp = svd.solve(y, 1e-12 * svd.singular_values.max()).map_err(|e| Error::Invalid(e.to_string()))?;
    if (a * &xp - y).norm() > 1e-9 * y.norm().max(1.0) {
        return Err(Error::Infeasible);
    }
    let pts = if dim == 0 { 1 } else { grid.points };
    let axes: Vec<Vec<DVector<f64>>> = (0..3)
        .map(|c| {
            if c < dim {
                (0..pts).map(|i| z.column(c) * grid.coord(i)).collect()
            } else {
                vec![DVector::zeros(n)]
            }
        })
        .collect();
    let mut best = (f64::INFINITY, xp.clone());
    let mut x01 = DVector::zeros(n);
    let mut x = DVector::zeros(n);
    for o0 in &axes[0] {
        for o1 in &axes[1] {
            x01.copy_from(&xp);
            x01 += o0;
            x01 += o1;
            for o2 in &axes[2] {
                x.copy_from(&x01);
                x += o2;
                let j = pen.j_eval(x.as_slice());
                if j < best.0 {
                    best = (j, x.clone());
                }
            }
        }
    }
    Ok(JminResult {
        x: best.1,
        objective: best.0,
        resolution: grid.resolution(),
    })
}

/// Basis pursuit, `min ‖x‖₁ s.t. Ax = y`, as a linear program in the split
/// variables `x = u - v`, `u, v >= 0`.
pub fn l1_minimize(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::Dimension(format!("y has length {}, A has {m} rows", y.len())));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let pos: Vec<_> = (0..n).map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let neg: Vec<_> = (0..n).map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for i in 0..m {
        let mut e = LinearExpr::empty();
        for j in 0..n {
            e.add(pos[j], a[(i, j)]);
            e.add(neg[j], -a[(i, j)]);
        }
        lp.add_constraint(e, ComparisonOp::Eq, y[i]);
    }
    let sol = lp.solve().map_err(|e| match e {
        minilp::Error::Infeasible => Error::Infeasible,
        other => Error::Lp(other.to_string()),
    })?;
    Ok(DVector::from_fn(n, |j, _| sol.var_value(pos[j]) - sol.var_value(neg[j])))
}
