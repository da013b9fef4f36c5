//! Weakly convex sparseness measures.
//!
//! Each [`Penalty`] is a scalar function `F` applied coordinate-wise to build
//! `J(x) = sum_i F(x_i)`. Besides the value, every measure exposes one
//! selection from its generalized gradient and the two shape parameters
//! used throughout the convergence analysis:
//!
//! * `alpha`, the slope of `F` at `0+` (so `F(t) <= alpha * |t|`),
//! * `rho <= 0`, the largest constant with `F(t) - rho * t^2` convex on `[0, inf)`.
//!
//! A measure can be rescaled two ways. `prescale` multiplies the value,
//! `argscale` multiplies the argument, and the composition is always
//! `prescale * F(argscale * t)`. Under value scaling by `b` both `alpha` and
//! `rho` scale by `b`; under argument scaling `alpha` scales by `b` and
//! `rho` by `b^2`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six closed-form families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `|t|`
    Abs,
    /// `|t| / (|t| + sigma)^(1 - p)`
    RationalP,
    /// `1 - exp(-sigma |t|)`
    Exp,
    /// `ln(1 + sigma |t|)`
    Log,
    /// `atan(sigma |t|)`
    Atan,
    /// `2 sigma |t| - sigma^2 t^2` for `|t| <= 1/sigma`, else `1`
    Mcp,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 6] = [
        PenaltyKind::Abs,
        PenaltyKind::RationalP,
        PenaltyKind::Exp,
        PenaltyKind::Log,
        PenaltyKind::Atan,
        PenaltyKind::Mcp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Abs => "abs",
            PenaltyKind::RationalP => "rational_p",
            PenaltyKind::Exp => "exp",
            PenaltyKind::Log => "log",
            PenaltyKind::Atan => "atan",
            PenaltyKind::Mcp => "mcp",
        }
    }

    /// Whether `F` stays bounded as `|t| -> inf`.
    pub fn is_bounded(self) -> bool {
        matches!(self, PenaltyKind::Exp | PenaltyKind::Atan | PenaltyKind::Mcp)
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PenaltyKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown penalty kind `{s}`")))
    }
}

fn one() -> f64 {
    1.0
}

fn default_p() -> f64 {
    0.5
}

/// A weakly convex sparseness measure with its scaling.
///
/// Values are immutable once built; the builder-style methods return copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub kind: PenaltyKind,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "one")]
    pub prescale: f64,
    #[serde(default = "one")]
    pub argscale: f64,
}

impl Penalty {
    pub fn new(kind: PenaltyKind, sigma: f64) -> Self {
        Penalty {
            kind,
            sigma,
            p: default_p(),
            prescale: 1.0,
            argscale: 1.0,
        }
    }

    pub fn abs() -> Self {
        Penalty::new(PenaltyKind::Abs, 1.0)
    }

    pub fn rational_p(sigma: f64, p: f64) -> Self {
        Penalty {
            p,
            ..Penalty::new(PenaltyKind::RationalP, sigma)
        }
    }

    pub fn exp(sigma: f64) -> Self {
        Penalty::new(PenaltyKind::Exp, sigma)
    }

    pub fn log(sigma: f64) -> Self {
        Penalty::new(PenaltyKind::Log, sigma)
    }

    pub fn atan(sigma: f64) -> Self {
        Penalty::new(PenaltyKind::Atan, sigma)
    }

    pub fn mcp(sigma: f64) -> Self {
        Penalty::new(PenaltyKind::Mcp, sigma)
    }

    pub fn with_prescale(self, prescale: f64) -> Self {
        Penalty { prescale, ..self }
    }

    pub fn with_argscale(self, argscale: f64) -> Self {
        Penalty { argscale, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sigma) {
            return Err(Error::Invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.kind == PenaltyKind::RationalP && !(0.0..1.0).contains(&self.p) {
            return Err(Error::Invalid(format!("p must lie in [0, 1), got {}", self.p)));
        }
        if !positive(self.prescale) || !positive(self.argscale) {
            return Err(Error::Invalid(format!(
                "prescale and argscale must be positive, got {} and {}",
                self.prescale, self.argscale
            )));
        }
        Ok(())
    }

    /// Unscaled `F(u)` for `u >= 0`.
    #[inline]
    fn base_value(&self, u: f64) -> f64 {
        let s = self.sigma;
        match self.kind {
            PenaltyKind::Abs => u,
            PenaltyKind::RationalP => u / (u + s).powf(1.0 - self.p),
            PenaltyKind::Exp => -(-s * u).exp_m1(),
            PenaltyKind::Log => (s * u).ln_1p(),
            PenaltyKind::Atan => (s * u).atan(),
            PenaltyKind::Mcp => {
                if u * s <= 1.0 {
                    2.0 * s * u - s * s * u * u
                } else {
                    1.0
                }
            }
        }
    }

    /// Unscaled right-derivative `F'(u+)` for `u >= 0`.
    #[inline]
    fn base_slope(&self, u: f64) -> f64 {
        let s = self.sigma;
        match self.kind {
            PenaltyKind::Abs => 1.0,
            PenaltyKind::RationalP => (u + s).powf(self.p - 2.0) * (self.p * u + s),
            PenaltyKind::Exp => s * (-s * u).exp(),
            PenaltyKind::Log => s / (1.0 + s * u),
            PenaltyKind::Atan => s / (1.0 + s * s * u * u),
            // The kink at u = 1/sigma takes the right-derivative, 0.
            PenaltyKind::Mcp => {
                if u * s < 1.0 {
                    2.0 * s - 2.0 * s * s * u
                } else {
                    0.0
                }
            }
        }
    }

    fn base_alpha(&self) -> f64 {
        let s = self.sigma;
        match self.kind {
            PenaltyKind::Abs => 1.0,
            PenaltyKind::RationalP => s.powf(self.p - 1.0),
            PenaltyKind::Exp | PenaltyKind::Log | PenaltyKind::Atan => s,
            PenaltyKind::Mcp => 2.0 * s,
        }
    }

    fn base_rho(&self) -> f64 {
        let s = self.sigma;
        match self.kind {
            PenaltyKind::Abs => 0.0,
            PenaltyKind::RationalP => (self.p - 1.0) * s.powf(self.p - 2.0),
            PenaltyKind::Exp | PenaltyKind::Log => -s * s / 2.0,
            PenaltyKind::Atan => -3.0 * 3f64.sqrt() * s * s / 16.0,
            PenaltyKind::Mcp => -s * s,
        }
    }

    /// `prescale * F(argscale * t)`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.prescale * self.base_value(self.argscale * t.abs())
    }

    /// One element of the generalized gradient at `t`; exactly `0` at `t = 0`.
    #[inline]
    pub fn grad(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let slope = self.prescale * self.argscale * self.base_slope(self.argscale * t.abs());
        slope.copysign(t)
    }

    /// `lim_{t -> 0+} F(t) / t`.
    pub fn alpha(&self) -> f64 {
        self.prescale * self.argscale * self.base_alpha()
    }

    /// Weak-convexity parameter, never positive.
    pub fn rho(&self) -> f64 {
        self.prescale * self.argscale * self.argscale * self.base_rho()
    }

    /// `-rho / alpha`, invariant under value scaling.
    pub fn nonconvexity(&self) -> f64 {
        // `+ 0.0` turns the `-0.0` of convex measures into `0.0`
        -self.rho() / self.alpha() + 0.0
    }

    /// Adjusts `prescale` so that `alpha() == 1`.
    pub fn with_unit_alpha(self) -> Self {
        let alpha = self.alpha();
        Penalty {
            prescale: self.prescale / alpha,
            ..self
        }
    }

    /// Unit-`alpha` version of this measure whose non-convexity equals
    /// `target`, reached by argument scaling.
    pub fn with_nonconvexity(self, target: f64) -> Result<Self> {
        let current = self.nonconvexity();
        if current == 0.0 {
            if target == 0.0 {
                return Ok(self.with_unit_alpha());
            }
            return Err(Error::Invalid(format!(
                "{} is convex and cannot reach non-convexity {target}",
                self.kind
            )));
        }
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::Invalid(format!("target non-convexity must be positive, got {target}")));
        }
        Ok(self.with_argscale(self.argscale * target / current).with_unit_alpha())
    }

    /// `J(x) = sum_i F(x_i)`.
    pub fn j_eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.eval(t)).sum()
    }

    pub fn j_grad(&self, x: &[f64]) -> GradientVector {
        let mut out = DVector::zeros(x.len());
        self.j_grad_into(x, out.as_mut_slice());
        GradientVector(out)
    }

    /// Writes the gradient of `J` at `x` into `out` without allocating.
    #[inline]
    pub fn j_grad_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), out.len());
        for (g, &t) in out.iter_mut().zip(x) {
            *g = self.grad(t);
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(sigma={}", self.kind, self.sigma)?;
        if self.kind == PenaltyKind::RationalP {
            write!(f, ", p={}", self.p)?;
        }
        write!(f, ", prescale={}, argscale={})", self.prescale, self.argscale)
    }
}

/// Generalized gradient of `J`, one entry per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(pub DVector<f64>);

impl GradientVector {
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// 256 log-spaced magnitudes in `[1e-6, 1e3]`, both signs, plus zero.
pub fn sample_grid() -> Vec<f64> {
    let n = 256;
    let (lo, hi) = (1e-6f64.ln(), 1e3f64.ln());
    let mut out = Vec::with_capacity(2 * n + 1);
    out.push(0.0);
    for i in 0..n {
        let t = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        out.push(t);
        out.push(-t);
    }
    out
}
