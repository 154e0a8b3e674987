//! Expected number of real roots `E(n, δ)` under the invariant ensemble.
//!
//! `E(n, δ) = 2^{-n/2} ∏_j Γ(1/2)/Γ((n_j+1)/2) · E|det Z|`, where `Z` is the
//! structured Gaussian matrix of [`crate::gaussian`]. The dispatcher returns
//! exact values where they are known (zero root count, rank-one degree
//! matrices, block-triangular splits) and falls back to Monte Carlo.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bkk::{self, serialize_biguint, ReductionStep};
use crate::gaussian::{mc_abs_det, VarianceProfile};
use crate::montecarlo::{derive_seed, MCEstimate};
use crate::permanent::{self, PermanentError};
use crate::shape::{ShapeError, ShapeSpec};
use crate::specialfn::{gamma_half_exact, ln_gamma_half, HalfInteger, PiRational};

/// Default number of standard errors allowed between an estimate and a bound.
pub const DEFAULT_SIGMAS: f64 = 4.0;

/// Above this `n` the prefactor is evaluated in the log domain.
const LOG_PREFACTOR_THRESHOLD: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool. Never changes results.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { samples: 100_000, seed: 0, workers: 0 }
    }
}

impl McConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        McConfig { seed, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationKind {
    ClosedForm,
    MonteCarlo,
    Product,
    Zero,
}

/// `coefficient · √radicand` with `coefficient = q · π^{p/2}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosedForm {
    pub coefficient: PiRational,
    #[serde(serialize_with = "serialize_biguint")]
    pub radicand: BigUint,
    /// Row factors `d_i` of `δ_ij = d_i e_j` (empty for a forced zero).
    pub row_factors: Vec<u32>,
    /// Column factors `e_j`; zero-size blocks carry 0.
    pub column_factors: Vec<u32>,
    pub symbolic: String,
}

impl ClosedForm {
    fn build(coefficient: PiRational, radicand: BigUint, row_factors: Vec<u32>, column_factors: Vec<u32>) -> Self {
        let symbolic = if coefficient.is_zero() {
            "0".to_string()
        } else if radicand.is_one() {
            coefficient.to_string()
        } else {
            format!("{coefficient}·√{radicand}")
        };
        ClosedForm { coefficient, radicand, row_factors, column_factors, symbolic }
    }

    fn zero() -> Self {
        Self::build(PiRational { coeff: BigRational::zero(), sqrt_pi_power: 0 }, BigUint::one(), vec![], vec![])
    }

    pub fn value(&self) -> f64 {
        if self.coefficient.is_zero() {
            return 0.0;
        }
        let c = self.coefficient.to_f64();
        let r = self.radicand.to_f64().unwrap_or(f64::INFINITY);
        let direct = c * r.sqrt();
        if direct.is_finite() && direct > 0.0 {
            direct
        } else {
            (self.coefficient.ln() + 0.5 * biguint_ln(&self.radicand)).exp()
        }
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbolic)
    }
}

fn biguint_ln(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (v >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub shape: ShapeSpec,
    pub value: f64,
    /// Zero for exact values.
    pub stderr: f64,
    pub kind: ExpectationKind,
    /// `2^{-n/2} ∏_j Γ(1/2)/Γ((n_j+1)/2)`.
    pub prefactor: f64,
    pub mc: Option<MCEstimate>,
    pub closed_form: Option<ClosedForm>,
    /// Sub-expectations whose product is `value`, for `kind = product`.
    pub factors: Vec<ExpectationResult>,
}

impl ExpectationResult {
    pub fn is_exact(&self) -> bool {
        self.stderr == 0.0 && self.mc.is_none() && self.factors.iter().all(|f| f.is_exact())
    }
}

fn half(m: usize) -> HalfInteger {
    HalfInteger::new(m as u32).expect("positive half-integer")
}

/// `2^{-n/2} ∏_j Γ(1/2)/Γ((n_j+1)/2)`.
pub fn prefactor(spec: &ShapeSpec) -> f64 {
    let n = spec.n();
    if n > LOG_PREFACTOR_THRESHOLD {
        let ln_gamma_sum: f64 =
            spec.block_sizes().iter().map(|&s| ln_gamma_half(half(1)) - ln_gamma_half(half(s + 1))).sum();
        return (ln_gamma_sum - 0.5 * n as f64 * std::f64::consts::LN_2).exp();
    }
    let exact = spec
        .block_sizes()
        .iter()
        .fold(PiRational::one(), |acc, &s| acc * (gamma_half_exact(half(1)) / gamma_half_exact(half(s + 1))));
    exact.to_f64() * 2f64.powf(-(n as f64) / 2.0)
}

fn prime_factors(mut x: u64, acc: &mut BTreeMap<u64, u64>, times: u64) {
    let mut p = 2;
    while p * p <= x {
        while x.is_multiple_of(p) {
            *acc.entry(p).or_default() += times;
            x /= p;
        }
        p += 1;
    }
    if x > 1 {
        *acc.entry(x).or_default() += times;
    }
}

/// Closed form for rank-one degree matrices `δ_ij = d_i e_j` (columns of
/// zero-size blocks are ignored):
///
/// `E = Γ((n+1)/2)/Γ(1/2) · ∏_j Γ(1/2)/Γ((n_j+1)/2) · √(∏ d_i) · √(∏ e_j^{n_j})`.
///
/// A zero row or a zero column of a positive-size block forces `E = 0`.
/// Returns `None` when δ is not rank one over the nonnegative integers.
pub fn rank_one_closed_form(spec: &ShapeSpec) -> Option<ClosedForm> {
    let n = spec.n();
    let k = spec.k();
    let positive: Vec<usize> = spec.positive_blocks().collect();
    let zero_row = (0..n).any(|i| positive.iter().all(|&j| spec.degree(i, j) == 0));
    let zero_col = positive.iter().any(|&j| (0..n).all(|i| spec.degree(i, j) == 0));
    if zero_row || zero_col {
        return Some(ClosedForm::zero());
    }
    let mut e = vec![0u32; k];
    let mut d = vec![0u32; n];
    if n > 0 {
        let g = positive.iter().fold(0u32, |g, &j| g.gcd(&spec.degree(0, j)));
        for &j in &positive {
            e[j] = spec.degree(0, j) / g;
            if e[j] == 0 {
                return None;
            }
        }
        let pivot = positive[0];
        for (i, di) in d.iter_mut().enumerate() {
            let v = spec.degree(i, pivot);
            if !v.is_multiple_of(e[pivot]) {
                return None;
            }
            *di = v / e[pivot];
            if positive.iter().any(|&j| spec.degree(i, j) as u64 != *di as u64 * e[j] as u64) {
                return None;
            }
        }
    }

    let gamma_part = spec
        .block_sizes()
        .iter()
        .filter(|&&s| s > 0)
        .fold(gamma_half_exact(half(n + 1)) / gamma_half_exact(half(1)), |acc, &s| {
            acc * (gamma_half_exact(half(1)) / gamma_half_exact(half(s + 1)))
        });
    let mut primes = BTreeMap::new();
    d.iter().for_each(|&x| prime_factors(x as u64, &mut primes, 1));
    positive.iter().for_each(|&j| prime_factors(e[j] as u64, &mut primes, spec.block_sizes()[j] as u64));
    let mut outside = BigUint::one();
    let mut radicand = BigUint::one();
    for (&p, &m) in &primes {
        outside *= BigUint::from(p).pow((m / 2) as u32);
        if m % 2 == 1 {
            radicand *= p;
        }
    }
    let coefficient = gamma_part
        * PiRational { coeff: BigRational::from_integer(BigInt::from(outside)), sqrt_pi_power: 0 };
    Some(ClosedForm::build(coefficient, radicand, d, e))
}

fn zero_result(spec: &ShapeSpec) -> ExpectationResult {
    ExpectationResult {
        shape: spec.clone(),
        value: 0.0,
        stderr: 0.0,
        kind: ExpectationKind::Zero,
        prefactor: prefactor(spec),
        mc: None,
        closed_form: None,
        factors: vec![],
    }
}

fn product_result(spec: &ShapeSpec, factors: Vec<ExpectationResult>) -> ExpectationResult {
    let value = factors.iter().map(|f| f.value).product();
    // independent factors: relative variances add to first order
    let var: f64 = (0..factors.len())
        .map(|t| {
            let others: f64 = factors.iter().enumerate().filter(|(s, _)| *s != t).map(|(_, f)| f.value).product();
            (others * factors[t].stderr).powi(2)
        })
        .sum();
    ExpectationResult {
        shape: spec.clone(),
        value,
        stderr: var.sqrt(),
        kind: ExpectationKind::Product,
        prefactor: prefactor(spec),
        mc: None,
        closed_form: None,
        factors,
    }
}

/// Expected number of real roots. Dispatch order: exact zero when the BKK
/// number vanishes, then a block-triangular split into a product, then the
/// rank-one closed form, then prefactor × Monte Carlo.
pub fn expectation(spec: &ShapeSpec, cfg: &McConfig) -> ExpectationResult {
    if bkk::bkk(spec).is_zero() {
        return zero_result(spec);
    }
    if let Some(split) = split_expectation(spec, cfg) {
        return split;
    }
    if let Some(cf) = rank_one_closed_form(spec) {
        return ExpectationResult {
            shape: spec.clone(),
            value: cf.value(),
            stderr: 0.0,
            kind: ExpectationKind::ClosedForm,
            prefactor: prefactor(spec),
            mc: None,
            closed_form: Some(cf),
            factors: vec![],
        };
    }
    let pre = prefactor(spec);
    let est = mc_abs_det(&VarianceProfile::from_shape(spec), cfg.samples, cfg.seed, cfg.workers);
    ExpectationResult {
        shape: spec.clone(),
        value: pre * est.mean,
        stderr: pre * est.stderr,
        kind: ExpectationKind::MonteCarlo,
        prefactor: pre,
        mc: Some(est),
        closed_form: None,
        factors: vec![],
    }
}

/// Product of the expectations of the two diagonal parts when the shape is
/// block triangular after relabelling; the off-diagonal part is irrelevant.
pub fn split_expectation(spec: &ShapeSpec, cfg: &McConfig) -> Option<ExpectationResult> {
    let split = bkk::product_split(spec).split?;
    let factors = [&split.first, &split.second]
        .into_iter()
        .enumerate()
        .map(|(t, part)| expectation(part, &cfg.with_seed(derive_seed(cfg.seed, part.fingerprint() ^ t as u64))))
        .collect();
    Some(product_result(spec, factors))
}

/// `E(n, δ') / E(n, δ)` for `δ'_ij = d_i e_j δ_ij`:
/// `√(∏ d_i) · √(∏_{j : n_j > 0} e_j^{n_j})`.
pub fn scaling_factor(spec: &ShapeSpec, d: &[u32], e: &[u32]) -> Result<f64, ShapeError> {
    if d.len() != spec.n() {
        return Err(ShapeError::MultiplierLength { expected: spec.n(), got: d.len() });
    }
    if e.len() != spec.k() {
        return Err(ShapeError::MultiplierLength { expected: spec.k(), got: e.len() });
    }
    Ok(biguint_sqrt_f64(&bkk::scale_factor(spec, d, e)))
}

fn biguint_sqrt_f64(v: &BigUint) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    match v.to_f64() {
        Some(x) if x.is_finite() => x.sqrt(),
        _ => (0.5 * biguint_ln(v)).exp(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    /// `per Δ_½ / ∏ n_j!`.
    pub upper: f64,
    /// Relative rounding bound of the float permanent.
    pub upper_rounding: f64,
    /// `√BKK`.
    pub lower: f64,
    #[serde(serialize_with = "serialize_biguint")]
    pub bkk: BigUint,
    pub estimate: ExpectationResult,
    /// Simple reducibility, the exact condition for `upper = E = lower`.
    pub equality: bool,
    pub witness: Vec<ReductionStep>,
    pub upper_margin: f64,
    pub lower_margin: f64,
}

impl BoundsReport {
    /// Floating slack used when comparing exact quantities.
    pub fn tolerance(&self) -> f64 {
        1e-9 * self.upper.abs().max(1.0)
    }

    /// `upper + s·se ≥ estimate ≥ lower - s·se`, with rounding slack.
    pub fn holds(&self, sigmas: f64) -> bool {
        let slack = sigmas * self.estimate.stderr + self.tolerance();
        self.upper_margin >= -slack && self.lower_margin >= -slack
    }

    /// Whether the two analytic bounds coincide numerically.
    pub fn bounds_coincide(&self) -> bool {
        (self.upper - self.lower).abs() <= self.tolerance()
    }
}

/// Permanent bounds `per Δ_½ / ∏ n_j! ≥ E ≥ √BKK` together with the
/// estimate and the simple-reducibility flag.
pub fn bounds(spec: &ShapeSpec, cfg: &McConfig) -> Result<BoundsReport, PermanentError> {
    let expanded = spec.expand_delta(true);
    let per = permanent::permanent_float_with_bound(&expanded.entries)?;
    let factorials = spec.block_factorial_product().to_f64().unwrap_or(f64::INFINITY);
    let upper = per.value / factorials;
    let count = bkk::bkk(spec);
    let lower = biguint_sqrt_f64(&count);
    let reduc = bkk::is_simply_reducible(spec);
    let estimate = expectation(spec, cfg);
    Ok(BoundsReport {
        upper,
        upper_rounding: per.relative_error_bound.unwrap_or(0.0),
        lower,
        bkk: count,
        upper_margin: upper - estimate.value,
        lower_margin: estimate.value - lower,
        estimate,
        equality: reduc.reducible,
        witness: reduc.witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowTerm {
    pub block: usize,
    pub degree: u32,
    /// Whether `BKK(n - e_j, δ^{-i}) > 0`, equivalently `E > 0` for the sub-shape.
    pub positive: bool,
    pub sub: ExpectationResult,
}

/// Row-recursive inequalities for one row `i`:
/// `Σ_j √δ_ij E_j ≥ E ≥ (Σ_j δ_ij E_j²)^{1/2}` with `E_j = E(n - e_j, δ^{-i})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowInequalities {
    pub row: usize,
    pub upper: f64,
    pub upper_stderr: f64,
    pub lower: f64,
    pub lower_stderr: f64,
    pub estimate: ExpectationResult,
    pub terms: Vec<RowTerm>,
    /// At most one `j` with `δ_ij > 0` and `E_j > 0`.
    pub equality_condition: bool,
    pub upper_holds: bool,
    pub lower_holds: bool,
    pub sigmas: f64,
}

impl RowInequalities {
    pub fn tolerance(&self) -> f64 {
        1e-9 * self.upper.abs().max(1.0)
    }

    /// Whether the two sides coincide in the computed values.
    pub fn sides_coincide(&self) -> bool {
        (self.upper - self.lower).abs() <= self.tolerance()
    }
}

pub fn row_inequalities(spec: &ShapeSpec, row: usize, cfg: &McConfig, sigmas: f64) -> Result<RowInequalities, ShapeError> {
    if row >= spec.n() {
        return Err(ShapeError::IndexOutOfRange { index: row + 1, len: spec.n() });
    }
    let terms: Vec<RowTerm> = spec
        .positive_blocks()
        .filter(|&j| spec.degree(row, j) > 0)
        .map(|j| {
            let sub_shape = spec.reduced(row, j);
            let positive = !bkk::bkk(&sub_shape).is_zero();
            let sub = expectation(&sub_shape, &cfg.with_seed(derive_seed(cfg.seed, sub_shape.fingerprint())));
            RowTerm { block: j, degree: spec.degree(row, j), positive, sub }
        })
        .collect();
    let upper: f64 = terms.iter().map(|t| (t.degree as f64).sqrt() * t.sub.value).sum();
    let upper_stderr = terms.iter().map(|t| t.degree as f64 * t.sub.stderr.powi(2)).sum::<f64>().sqrt();
    let lower = terms.iter().map(|t| t.degree as f64 * t.sub.value.powi(2)).sum::<f64>().sqrt();
    let lower_stderr = if lower > 0.0 {
        terms.iter().map(|t| (t.degree as f64 * t.sub.value * t.sub.stderr / lower).powi(2)).sum::<f64>().sqrt()
    } else {
        0.0
    };
    let estimate = expectation(spec, cfg);
    let tol = 1e-9 * upper.abs().max(1.0);
    let se = estimate.stderr;
    let upper_holds = estimate.value <= upper + sigmas * (upper_stderr.powi(2) + se.powi(2)).sqrt() + tol;
    let lower_holds = estimate.value >= lower - sigmas * (lower_stderr.powi(2) + se.powi(2)).sqrt() - tol;
    let equality_condition = terms.iter().filter(|t| t.positive).count() <= 1;
    Ok(RowInequalities {
        row,
        upper,
        upper_stderr,
        lower,
        lower_stderr,
        estimate,
        terms,
        equality_condition,
        upper_holds,
        lower_holds,
        sigmas,
    })
}
