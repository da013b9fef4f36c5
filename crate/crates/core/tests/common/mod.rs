//! Helpers shared by the integration test targets.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};
use pgg::harness::{derive_seed, gen_matrix, gen_signal, rng_from_seed, NonzeroDist};
use pgg::{Penalty, PenaltyKind};
use rand::Rng;

/// Log-uniform draw from `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// `count` random parameterizations of `kind`, reproducible from `seed`.
pub fn random_penalties(kind: PenaltyKind, count: usize, seed: u64) -> Vec<Penalty> {
    let mut rng = rng_from_seed(derive_seed(seed, &[kind as u64]));
    (0..count)
        .map(|_| Penalty {
            kind,
            sigma: log_uniform(&mut rng, 0.1, 10.0),
            p: rng.random_range(0.0..0.95),
            prescale: log_uniform(&mut rng, 0.2, 5.0),
            argscale: log_uniform(&mut rng, 0.2, 5.0),
        })
        .collect()
}

/// Absolute tolerance `tol` that grows with the magnitude of the compared terms.
fn slack(tol: f64, terms: &[f64]) -> f64 {
    tol * terms.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Location of the kink of a scaled MCP, if any.
fn kink(pen: &Penalty) -> Option<f64> {
    (pen.kind == PenaltyKind::Mcp).then(|| 1.0 / (pen.sigma * pen.argscale))
}

/// Checks every measure and generalized-gradient law on `grid`. Returns
/// the first violation as a message.
pub fn check_penalty_laws(pen: &Penalty, grid: &[f64]) -> Result<(), String> {
    let alpha = pen.alpha();
    let rho = pen.rho();
    let tag = |what: &str, detail: String| Err(format!("{pen}: {what}: {detail}"));
    if !(alpha > 0.0) || rho > 0.0 {
        return tag("parameters", format!("alpha = {alpha}, rho = {rho}"));
    }
    if pen.eval(0.0) != 0.0 || pen.grad(0.0) != 0.0 {
        return tag("origin", format!("F(0) = {}, f(0) = {}", pen.eval(0.0), pen.grad(0.0)));
    }
    let vals: Vec<f64> = grid.iter().map(|&t| pen.eval(t)).collect();
    let grads: Vec<f64> = grid.iter().map(|&t| pen.grad(t)).collect();
    for (i, &t) in grid.iter().enumerate() {
        let (f, g) = (vals[i], grads[i]);
        if pen.eval(-t) != f {
            return tag("evenness", format!("t = {t}"));
        }
        if g.abs() > alpha + slack(1e-9, &[alpha]) {
            return tag("gradient bound", format!("t = {t}, f = {g}"));
        }
        if t > 0.0 && g < 0.0 {
            return tag("gradient sign", format!("t = {t}, f = {g}"));
        }
        let lower = alpha * t.abs() + rho * t * t;
        if f - lower < -slack(1e-9, &[f, alpha * t, rho * t * t]) {
            return tag("quadratic minorant", format!("t = {t}, F = {f}, bound = {lower}"));
        }
        // central differences away from the origin and the MCP kink
        let near_kink = kink(pen).is_some_and(|k| (t.abs() - k).abs() < 1e-3);
        if t.abs() >= 1e-3 && !near_kink {
            let h = 1e-6 * t.abs().max(1e-3);
            let fd = (pen.eval(t + h) - pen.eval(t - h)) / (2.0 * h);
            if (fd - g).abs() > slack(1e-6, &[g]) {
                return tag("finite difference", format!("t = {t}, f = {g}, fd = {fd}"));
            }
        }
    }
    let pos: Vec<(f64, f64)> = grid.iter().zip(&vals).filter(|(t, _)| **t >= 0.0).map(|(t, f)| (*t, *f)).collect();
    let mut sorted = pos.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sorted.windows(2) {
        let ((t1, f1), (t2, f2)) = (w[0], w[1]);
        if f2 < f1 {
            return tag("monotonicity", format!("F({t1}) = {f1} > F({t2}) = {f2}"));
        }
        if t1 > 0.0 && f1 / t1 < f2 / t2 - 1e-12 * (f1 / t1).max(1.0) {
            return tag("F(t)/t non-increasing", format!("t1 = {t1}, t2 = {t2}"));
        }
    }
    for (i, &t1) in grid.iter().enumerate() {
        for (j, &t2) in grid.iter().enumerate() {
            let (f1, f2) = (vals[i], vals[j]);
            let g1 = grads[i];
            let sum = pen.eval(t1 + t2);
            if sum > f1 + f2 + slack(1e-9, &[f1, f2]) {
                return tag("subadditivity", format!("t1 = {t1}, t2 = {t2}"));
            }
            let d = t1 - t2;
            let lhs = d * g1;
            let rhs = f1 - f2 + rho * d * d;
            if lhs < rhs - slack(1e-9, &[lhs, f1, f2, rho * d * d]) {
                return tag("weak-convexity inequality", format!("t1 = {t1}, t2 = {t2}, {lhs} < {rhs}"));
            }
            if 0.0 <= t1 && t1 < t2 {
                let mid = pen.eval(0.5 * (t1 + t2));
                let bound = 0.5 * (f1 + f2) - rho * d * d / 4.0;
                if mid > bound + slack(1e-9, &[f1, f2, rho * d * d]) {
                    return tag("midpoint weak convexity", format!("t1 = {t1}, t2 = {t2}"));
                }
            }
        }
    }
    // the slope at the origin is alpha
    let h = 1e-9 / (pen.argscale * pen.sigma.max(1.0));
    let slope = pen.eval(h) / h;
    if (slope - alpha).abs() > 1e-6 * alpha {
        return tag("slope at the origin", format!("F(h)/h = {slope}, alpha = {alpha}"));
    }
    Ok(())
}

/// Gaussian instance `(A, x*)` of the experiment ensemble.
pub fn instance(m: usize, n: usize, k: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let a = gen_matrix(m, n, derive_seed(seed, &[0]));
    let x = gen_signal(n, k, NonzeroDist::Gaussian, derive_seed(seed, &[1]));
    (a, x)
}

/// Rejection-sampled 3×6 instance with a 1-sparse signal that basis pursuit
/// misses although every pair of columns is independent.
pub fn l1_failure_instance(seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    for attempt in 0..10_000u64 {
        let a = gen_matrix(3, 6, derive_seed(seed, &[attempt, 0]));
        let x = gen_signal(6, 1, NonzeroDist::Gaussian, derive_seed(seed, &[attempt, 1]));
        let lp = pgg::analysis::l1_minimize(&a, &(&a * &x)).unwrap();
        if (&lp - &x).norm() > 1e-3 * x.norm() && pgg::analysis::gamma_l0_certify(&a, 1).unwrap() {
            return (a, x);
        }
    }
    panic!("no l1 failure instance found");
}

/// Bounded exponential measure `1 - exp(-beta |t|)`.
pub fn exp_measure(beta: f64) -> Penalty {
    Penalty::exp(1.0).with_argscale(beta)
}
