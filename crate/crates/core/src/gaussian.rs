//! Structured Gaussian matrices and Monte Carlo estimates of `E|det|`.
//!
//! The matrix attached to a shape has independent mean-zero normal entries;
//! entry `(i, c)` has variance `δ_{i, q(c)}`, where `q(c)` is the block that
//! owns column `c`.

use serde::Serialize;

use crate::matrix::Matrix;
use crate::montecarlo::{self, MCEstimate, SampleStream};
use crate::permanent::{self, PermanentError};
use crate::shape::ShapeSpec;
use crate::specialfn::{gamma_half_exact, ln_gamma_half, HalfInteger};

/// Above this size `|det|` is accumulated as a sum of logarithms.
pub const LOG_DET_THRESHOLD: usize = 40;

/// Square matrix of entrywise variances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceProfile {
    variances: Matrix<f64>,
    sigmas: Matrix<f64>,
}

impl VarianceProfile {
    /// Panics on a non-square matrix or a negative or non-finite variance.
    pub fn new(variances: Matrix<f64>) -> Self {
        assert!(variances.is_square(), "variance profile must be square");
        assert!(
            variances.as_slice().iter().all(|v| v.is_finite() && *v >= 0.0),
            "variances must be finite and nonnegative"
        );
        let sigmas = variances.map(|v| v.sqrt());
        VarianceProfile { variances, sigmas }
    }

    /// Variance `δ_ij` on every column of block `j`.
    pub fn from_shape(spec: &ShapeSpec) -> Self {
        Self::new(spec.expand_delta(false).entries)
    }

    pub fn all_ones(n: usize) -> Self {
        Self::new(Matrix::from_fn(n, n, |_, _| 1.0))
    }

    pub fn n(&self) -> usize {
        self.variances.rows()
    }

    pub fn variances(&self) -> &Matrix<f64> {
        &self.variances
    }

    pub fn sigmas(&self) -> &Matrix<f64> {
        &self.sigmas
    }

    /// Profile of the minor obtained by deleting row `a` and column `b`.
    pub fn minor(&self, a: usize, b: usize) -> VarianceProfile {
        VarianceProfile::new(self.variances.minor(a, b))
    }

    /// Multiplies every variance in row `a` by `factor`.
    pub fn scale_row(&self, a: usize, factor: f64) -> VarianceProfile {
        let n = self.n();
        VarianceProfile::new(Matrix::from_fn(n, n, |i, c| {
            let v = self.variances[(i, c)];
            if i == a {
                v * factor
            } else {
                v
            }
        }))
    }
}

/// Draws one matrix. Every entry consumes one normal variate, so the number
/// of draws per sample is fixed; zero-variance entries are exactly zero.
pub fn sample_matrix(profile: &VarianceProfile, stream: &mut SampleStream) -> Matrix<f64> {
    let n = profile.n();
    let sig = profile.sigmas();
    Matrix::from_fn(n, n, |i, c| {
        let z = stream.normal();
        let s = sig[(i, c)];
        if s == 0.0 {
            0.0
        } else {
            s * z
        }
    })
}

/// `|det m|` by LU factorization with partial pivoting. Consumes `m`.
pub fn abs_det(mut m: Matrix<f64>) -> f64 {
    let n = m.rows();
    assert!(m.is_square());
    let log_domain = n > LOG_DET_THRESHOLD;
    let mut prod = 1.0f64;
    let mut log_sum = 0.0f64;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].abs();
        for r in col + 1..n {
            let v = m[(r, col)].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in col..n {
                let tmp = m[(col, c)];
                m[(col, c)] = m[(piv, c)];
                m[(piv, c)] = tmp;
            }
        }
        let p = m[(col, col)];
        if log_domain {
            log_sum += p.abs().ln();
        } else {
            prod *= p;
        }
        for r in col + 1..n {
            let f = m[(r, col)] / p;
            if f != 0.0 {
                for c in col + 1..n {
                    let v = m[(col, c)];
                    m[(r, c)] -= f * v;
                }
            }
        }
    }
    if log_domain {
        log_sum.exp()
    } else {
        prod.abs()
    }
}

/// Monte Carlo estimate of `E|det|` for the given profile. Depends only on
/// `(seed, samples)`.
pub fn mc_abs_det(profile: &VarianceProfile, samples: u64, seed: u64, workers: usize) -> MCEstimate {
    montecarlo::estimate(samples, seed, workers, |_, stream| abs_det(sample_matrix(profile, stream)))
}

/// `E|det|` of an `n x n` matrix of independent standard normals:
/// `2^{n/2} Γ((n+1)/2) / Γ(1/2)`.
pub fn abs_det_closed_standard(n: u32) -> f64 {
    assert!(n >= 1);
    let half = |m| HalfInteger::new(m).unwrap();
    if n > 300 {
        let ln = 0.5 * n as f64 * std::f64::consts::LN_2 + ln_gamma_half(half(n + 1)) - ln_gamma_half(half(1));
        return ln.exp();
    }
    let ratio = (gamma_half_exact(half(n + 1)) / gamma_half_exact(half(1))).to_f64();
    2f64.powf(n as f64 / 2.0) * ratio
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Bounds on `E|det|` from expanding along row `row`, given the means
/// `E|det|` of the minors `(row, b)` for every column `b`:
/// upper `√(2/π) Σ_b σ_ab m_b`, lower `√(2/π) (Σ_b σ²_ab m_b²)^{1/2}`.
pub fn minor_expansion_bounds(profile: &VarianceProfile, row: usize, minor_means: &[f64]) -> (f64, f64) {
    assert_eq!(minor_means.len(), profile.n());
    let sig = profile.sigmas();
    let var = profile.variances();
    let upper: f64 = (0..profile.n()).map(|b| sig[(row, b)] * minor_means[b]).sum();
    let lower: f64 = (0..profile.n()).map(|b| var[(row, b)] * minor_means[b].powi(2)).sum::<f64>().sqrt();
    (SQRT_2_OVER_PI * upper, SQRT_2_OVER_PI * lower)
}

/// `(2/π)^{n/2} per Σ₁ ≥ E|det| ≥ (2/π)^{n/2} √(per Σ₂)`, with `Σ₁` the
/// standard deviations and `Σ₂` the variances.
pub fn permanent_sandwich(profile: &VarianceProfile) -> Result<(f64, f64), PermanentError> {
    let scale = SQRT_2_OVER_PI.powi(profile.n() as i32);
    let upper = permanent::permanent_float(profile.sigmas())?;
    let lower = permanent::permanent_float(profile.variances())?.max(0.0).sqrt();
    Ok((scale * upper, scale * lower))
}
