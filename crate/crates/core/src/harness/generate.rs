//! Random instances and recovery metrics.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Upper cap on reported RSNR, reached when the error norm underflows.
pub const RSNR_CAP_DB: f64 = 300.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a list of indices into an independent 64-bit seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0xA076_1D64_78BD_642F))))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `M x N` matrix with i.i.d. `N(0, 1/M)` entries.
pub fn gen_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (m as f64).sqrt();
    // row-major fill so the stream order matches the on-disk layout
    let mut out = DMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let g: f64 = rng.sample(StandardNormal);
            out[(i, j)] = g * scale;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonzeroDist {
    Gaussian,
    Bernoulli,
}

impl fmt::Display for NonzeroDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NonzeroDist::Gaussian => "gaussian",
            NonzeroDist::Bernoulli => "bernoulli",
        })
    }
}

/// K-sparse unit-norm signal with a uniformly random support.
pub fn gen_signal(n: usize, k: usize, dist: NonzeroDist, seed: u64) -> DVector<f64> {
    assert!(k >= 1 && k <= n, "sparsity {k} outside 1..={n}");
    let mut rng = rng_from_seed(seed);
    let mut support = index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut x = DVector::zeros(n);
    for &i in &support {
        x[i] = match dist {
            NonzeroDist::Gaussian => loop {
                let g: f64 = rng.sample(StandardNormal);
                if g != 0.0 {
                    break g;
                }
            },
            NonzeroDist::Bernoulli => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
    }
    let norm = x.norm();
    x / norm
}

/// Measurement SNR in dB, or noiseless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Msnr {
    Noiseless,
    Db(f64),
}

impl Msnr {
    pub fn is_noiseless(self) -> bool {
        matches!(self, Msnr::Noiseless)
    }

    /// dB value with `+inf` for noiseless.
    pub fn db(self) -> f64 {
        match self {
            Msnr::Noiseless => f64::INFINITY,
            Msnr::Db(v) => v,
        }
    }
}

impl fmt::Display for Msnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Msnr::Noiseless => f.write_str("inf"),
            Msnr::Db(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Msnr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "noiseless" => Ok(Msnr::Noiseless),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad MSNR `{s}`")))?;
                if v.is_infinite() && v > 0.0 {
                    Ok(Msnr::Noiseless)
                } else if v.is_finite() {
                    Ok(Msnr::Db(v))
                } else {
                    Err(Error::Invalid(format!("bad MSNR `{s}`")))
                }
            }
        }
    }
}

impl Serialize for Msnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Msnr::Noiseless => s.serialize_str("inf"),
            Msnr::Db(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Msnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Option::<Raw>::deserialize(d)? {
            None => Ok(Msnr::Noiseless),
            Some(Raw::Num(v)) => Ok(Msnr::Db(v)),
            Some(Raw::Text(t)) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Gaussian noise scaled so that `20 log10(‖Ax‖ / ‖e‖) = msnr`.
pub fn gen_noise(ax: &DVector<f64>, msnr: Msnr, seed: u64) -> Result<DVector<f64>> {
    let m = ax.len();
    let Msnr::Db(db) = msnr else {
        return Ok(DVector::zeros(m));
    };
    let power = ax.norm();
    if power == 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    let mut rng = rng_from_seed(seed);
    let g = loop {
        let g = DVector::<f64>::from_fn(m, |_, _| rng.sample(StandardNormal));
        if g.norm() > 0.0 {
            break g;
        }
    };
    let target = power * 10f64.powf(-db / 20.0);
    Ok(&g * (target / g.norm()))
}

/// `20 log10(‖x*‖ / ‖x_hat - x*‖)`, capped at [`RSNR_CAP_DB`].
pub fn rsnr_db(x_hat: &DVector<f64>, x_star: &DVector<f64>) -> f64 {
    let err = (x_hat - x_star).norm();
    let db = 20.0 * (x_star.norm() / err).log10();
    if db.is_nan() {
        RSNR_CAP_DB
    } else {
        db.min(RSNR_CAP_DB)
    }
}

/// `t_{0.975, n-1}`.
pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Student-t 95% interval for the mean.
pub fn ci95(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let half = t_quantile_975(n - 1) * var.sqrt() / (n as f64).sqrt();
    Ok((mean - half, mean + half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn matrix_moments() {
        let (m, n) = (100, 200);
        let a = gen_matrix(m, n, 11);
        let count = (m * n) as f64;
        let mean = a.iter().sum::<f64>() / count;
        let sd = 1.0 / (m as f64).sqrt();
        assert!(mean.abs() <= 4.0 * sd / count.sqrt(), "mean {mean}");
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        assert!((var * m as f64 - 1.0).abs() < 0.1, "var {var}");
        assert_eq!(gen_matrix(m, n, 11), a);
        assert_ne!(gen_matrix(m, n, 12), a);
    }

    #[test]
    fn signal_shape() {
        for dist in [NonzeroDist::Gaussian, NonzeroDist::Bernoulli] {
            for seed in 0..20 {
                let x = gen_signal(40, 7, dist, seed);
                assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 7);
                assert!((x.norm() - 1.0).abs() <= 1e-12);
            }
        }
        let x = gen_signal(30, 5, NonzeroDist::Bernoulli, 3);
        let mags: Vec<f64> = x.iter().filter(|&&v| v != 0.0).map(|v| v.abs()).collect();
        for m in &mags {
            assert_relative_eq!(*m, mags[0], max_relative = 1e-15);
        }
        assert_relative_eq!(mags[0], 1.0 / 5f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn noise_levels() {
        let ax = DVector::from_vec(vec![3.0, -4.0, 1.0, 0.5]);
        assert_eq!(gen_noise(&ax, Msnr::Noiseless, 1).unwrap(), DVector::zeros(4));
        let e0 = gen_noise(&ax, Msnr::Db(0.0), 1).unwrap();
        assert!((e0.norm() - ax.norm()).abs() <= 1e-12);
        let e20 = gen_noise(&ax, Msnr::Db(20.0), 1).unwrap();
        assert_relative_eq!(e20.norm(), 0.1 * ax.norm(), max_relative = 1e-12);
        assert!(matches!(gen_noise(&DVector::zeros(3), Msnr::Db(10.0), 1), Err(Error::ZeroSignalPower)));
    }

    #[test]
    fn rsnr_examples() {
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(rsnr_db(&x, &x), RSNR_CAP_DB);
        let off = DVector::from_vec(vec![1.0, 0.01, 0.0]);
        assert_relative_eq!(rsnr_db(&off, &x), 40.0, max_relative = 1e-12);
        assert_relative_eq!(rsnr_db(&DVector::zeros(3), &x), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ci_examples() {
        assert_eq!(ci95(&[2.5; 6]).unwrap(), (2.5, 2.5));
        let (lo, hi) = ci95(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(lo, 1.0 - 12.706_204_736, max_relative = 1e-8);
        assert_relative_eq!(hi, 1.0 + 12.706_204_736, max_relative = 1e-8);
        let (lo, hi) = ci95(&[1.0, 4.0, 2.0, 8.0]).unwrap();
        assert_relative_eq!((lo + hi) / 2.0, 3.75, max_relative = 1e-14);
        assert!(ci95(&[1.0]).is_err());
    }

    #[test]
    fn msnr_parsing() {
        assert_eq!("inf".parse::<Msnr>().unwrap(), Msnr::Noiseless);
        assert_eq!("20".parse::<Msnr>().unwrap(), Msnr::Db(20.0));
        assert!("nan".parse::<Msnr>().is_err());
        let v: Vec<Msnr> = serde_json::from_str(r#"[20, "inf", null]"#).unwrap();
        assert_eq!(v, vec![Msnr::Db(20.0), Msnr::Noiseless, Msnr::Noiseless]);
        assert_eq!(serde_json::to_string(&Msnr::Noiseless).unwrap(), r#""inf""#);
    }

    #[test]
    fn seeds_mix() {
        let a = derive_seed(7, &[1, 2]);
        assert_eq!(a, derive_seed(7, &[1, 2]));
        assert_ne!(a, derive_seed(7, &[2, 1]));
        assert_ne!(a, derive_seed(8, &[1, 2]));
    }
}
