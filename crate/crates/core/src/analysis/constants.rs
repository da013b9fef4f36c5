use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::Penalty;
use crate::pinv::SensingModel;

/// Constants of the PGG / APGG error bounds for one `(penalty, model)`
/// pair, given an assumed null space constant `gamma` and an initial
/// distance bound `m0 >= ‖x(0) - x*‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConstants {
    pub gamma: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    pub alpha: f64,
    pub rho: f64,
    pub n: usize,
    pub zeta: f64,
    pub d: f64,
    pub sigma_min: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C5")]
    pub c5: f64,
    #[serde(rename = "C6")]
    pub c6: f64,
    #[serde(rename = "C7")]
    pub c7: f64,
    /// Largest admissible non-convexity, `(1 - gamma) / ((5 + 3 gamma) M0)`.
    pub threshold: f64,
}

/// Spectral inputs of the constant calculus, usually read off a
/// [`SensingModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInputs {
    pub zeta: f64,
    pub d: f64,
    pub sigma_min: f64,
    pub norm_a: f64,
    pub norm_b: f64,
}

impl From<&SensingModel> for SpectralInputs {
    fn from(model: &SensingModel) -> Self {
        SpectralInputs {
            zeta: model.zeta,
            d: model.d,
            sigma_min: model.sigma_min,
            norm_a: model.norm_a,
            norm_b: model.norm_b,
        }
    }
}

pub fn constants(
    pen: &Penalty,
    model: &SensingModel,
    gamma: f64,
    m0: f64,
    n: usize,
) -> Result<ConvergenceConstants> {
    constants_from(pen, SpectralInputs::from(model), gamma, m0, n)
}

pub fn constants_from(
    pen: &Penalty,
    spec: SpectralInputs,
    gamma: f64,
    m0: f64,
    n: usize,
) -> Result<ConvergenceConstants> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::NullSpaceViolated(gamma));
    }
    if !(m0.is_finite() && m0 > 0.0) {
        return Err(Error::Invalid(format!("M0 must be positive, got {m0}")));
    }
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    if !(spec.zeta >= 0.0 && spec.zeta < 1.0) {
        return Err(Error::Invalid(format!("zeta must lie in [0, 1), got {}", spec.zeta)));
    }
    pen.validate()?;
    let alpha = pen.alpha();
    let rho = pen.rho();
    let zeta = spec.zeta;
    let sqrt_n = (n as f64).sqrt();
    let slope = alpha * sqrt_n;

    let c1 = pen.eval(m0) / m0 * (1.0 - gamma) / (1.0 + gamma);
    let c2 = (slope + c1) / (c1 * spec.sigma_min);
    let c5 = 2.0 * zeta * slope * spec.norm_a / (1.0 - zeta);
    let c6 = 2.0 * spec.norm_b * c5 / c1 * (2.0 * (1.0 + zeta) * slope * spec.norm_a + (3.0 + zeta) * c5);
    let c7 = 4.0 * spec.norm_b / c1 * (slope * spec.norm_a + c5);
    let c3 = (2.0 * c2 * c5).max(2.0 * spec.d * alpha * alpha * n as f64 / c1 + c6);
    let c4 = (2.0 * c2).max(c7);
    let threshold = (1.0 - gamma) / (5.0 + 3.0 * gamma) / m0;

    Ok(ConvergenceConstants {
        gamma,
        m0,
        alpha,
        rho,
        n,
        zeta,
        d: spec.d,
        sigma_min: spec.sigma_min,
        norm_a: spec.norm_a,
        norm_b: spec.norm_b,
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        c7,
        threshold,
    })
}

/// Outcome of the non-convexity condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Check {
    pub ok: bool,
    /// `threshold - nonconvexity`; nonnegative iff `ok`.
    pub margin: f64,
}

pub fn check_theorem3(pen: &Penalty, consts: &ConvergenceConstants) -> Theorem3Check {
    let margin = consts.threshold - pen.nonconvexity();
    Theorem3Check { ok: margin >= 0.0, margin }
}

/// Radius `C1 / (-4 rho)` of the region free of spurious stationary points;
/// infinite for convex penalties.
pub fn local_radius(pen: &Penalty, consts: &ConvergenceConstants) -> f64 {
    let rho = pen.rho();
    if rho == 0.0 {
        f64::INFINITY
    } else {
        consts.c1 / (-4.0 * rho)
    }
}

/// `4 alpha² N kappa / C1 + 8 C2 ‖e‖₂`.
pub fn error_bound_pgg(consts: &ConvergenceConstants, alpha: f64, n: usize, kappa: f64, noise_norm: f64) -> f64 {
    4.0 * alpha * alpha * n as f64 / consts.c1 * kappa + 8.0 * consts.c2 * noise_norm
}

/// `2 C3 kappa + 2 C4 ‖e‖₂`.
pub fn error_bound_apgg(consts: &ConvergenceConstants, kappa: f64, noise_norm: f64) -> f64 {
    2.0 * consts.c3 * kappa + 2.0 * consts.c4 * noise_norm
}

/// Bound for a signal within `tau` of a sparse one:
/// `2 C3 kappa + 2 C4 ‖e‖₂ + (2 C4 ‖A‖₂ + 1) tau`.
pub fn error_bound_compressible(
    consts: &ConvergenceConstants,
    kappa: f64,
    noise_norm: f64,
    tau: f64,
    norm_a: f64,
) -> f64 {
    error_bound_apgg(consts, kappa, noise_norm) + (2.0 * consts.c4 * norm_a + 1.0) * tau
}

/// `‖A(x(n) - x*)‖₂` envelope of the approximate projection:
/// `‖y‖₂ zeta^(n+1) + C5 kappa / 2 + ‖e‖₂`.
pub fn residual_envelope(consts: &ConvergenceConstants, y_norm: f64, iter: usize, kappa: f64, noise_norm: f64) -> f64 {
    y_norm * consts.zeta.powi(iter as i32 + 1) + 0.5 * consts.c5 * kappa + noise_norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_spectral() -> SpectralInputs {
        SpectralInputs {
            zeta: 0.0,
            d: 1.0,
            sigma_min: 1.0,
            norm_a: 1.0,
            norm_b: 1.0,
        }
    }

    #[test]
    fn abs_c1_and_threshold() {
        let c = constants_from(&Penalty::abs(), unit_spectral(), 0.5, 1.0, 10).unwrap();
        assert_relative_eq!(c.c1, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.threshold, 0.5 / 6.5, max_relative = 1e-15);
        assert_relative_eq!(c.threshold, 0.076923, max_relative = 1e-5);
        assert_relative_eq!(c.c2, (10f64.sqrt() + 1.0 / 3.0) * 3.0, max_relative = 1e-14);
    }

    #[test]
    fn exact_projection_zeroes_c5_c6() {
        let c = constants_from(&Penalty::mcp(0.5), unit_spectral(), 0.3, 0.8, 20).unwrap();
        assert_eq!(c.c5, 0.0);
        assert_eq!(c.c6, 0.0);
        let expect = 2.0 * c.d * c.alpha * c.alpha * 20.0 / c.c1;
        assert_relative_eq!(c.c3, expect.max(0.0), max_relative = 1e-15);
    }

    #[test]
    fn approximate_constants_by_hand() {
        let spec = SpectralInputs {
            zeta: 0.5,
            d: 1.0,
            sigma_min: 0.5,
            norm_a: 2.0,
            norm_b: 0.25,
        };
        let c = constants_from(&Penalty::abs(), spec, 0.0, 1.0, 4).unwrap();
        // alpha sqrt(N) = 2
        assert_relative_eq!(c.c1, 1.0);
        assert_relative_eq!(c.c2, 6.0);
        assert_relative_eq!(c.c5, 2.0 * 0.5 * 2.0 * 2.0 / 0.5);
        assert_relative_eq!(c.c6, 2.0 * 0.25 * 8.0 * (2.0 * 1.5 * 2.0 * 2.0 + 3.5 * 8.0));
        assert_relative_eq!(c.c7, 4.0 * 0.25 * (4.0 + 8.0));
        assert_relative_eq!(c.c3, (2.0 * 6.0 * 8.0f64).max(8.0 + c.c6));
        assert_relative_eq!(c.c4, 12.0f64.max(12.0));
    }

    #[test]
    fn gamma_out_of_range() {
        assert!(matches!(
            constants_from(&Penalty::abs(), unit_spectral(), 1.0, 1.0, 3),
            Err(Error::NullSpaceViolated(_))
        ));
        assert!(constants_from(&Penalty::abs(), unit_spectral(), -0.1, 1.0, 3).is_err());
        assert!(constants_from(&Penalty::abs(), unit_spectral(), 0.2, 0.0, 3).is_err());
    }

    #[test]
    fn theorem3_checks() {
        let c = constants_from(&Penalty::abs(), unit_spectral(), 0.9, 100.0, 3).unwrap();
        assert!(check_theorem3(&Penalty::abs(), &c).ok);
        let wild = Penalty::mcp(1e6);
        let c = constants_from(&wild, unit_spectral(), 0.2, 1.0, 3).unwrap();
        let chk = check_theorem3(&wild, &c);
        assert!(!chk.ok && chk.margin < 0.0);
    }

    #[test]
    fn bound_plug_ins() {
        let mut c = constants_from(&Penalty::abs(), unit_spectral(), 0.5, 1.0, 10).unwrap();
        c.c1 = 1.0 / 3.0;
        c.c2 = 5.0;
        assert_relative_eq!(error_bound_pgg(&c, 1.0, 10, 1e-3, 1e-2), 0.52, max_relative = 1e-12);
        assert_relative_eq!(error_bound_pgg(&c, 1.0, 10, 1e-3, 0.0), 0.12, max_relative = 1e-12);
        assert_relative_eq!(error_bound_pgg(&c, 1.0, 10, 0.0, 1e-2), 0.4, max_relative = 1e-12);
        c.c3 = 3.0;
        c.c4 = 2.0;
        assert_relative_eq!(error_bound_apgg(&c, 0.1, 0.05), 0.8, max_relative = 1e-12);
        assert_relative_eq!(error_bound_apgg(&c, 0.0, 0.05), 0.2, max_relative = 1e-12);
        assert_relative_eq!(error_bound_apgg(&c, 0.1, 0.0), 0.6, max_relative = 1e-12);
        assert_relative_eq!(error_bound_compressible(&c, 0.1, 0.05, 0.0, 1.5), 0.8, max_relative = 1e-12);
        assert_relative_eq!(error_bound_compressible(&c, 0.0, 0.0, 0.1, 1.5), 0.7, max_relative = 1e-12);
        assert_relative_eq!(error_bound_compressible(&c, 0.1, 0.05, 0.1, 1.5), 1.5, max_relative = 1e-12);
    }
}
