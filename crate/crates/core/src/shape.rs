//! Problem instances `(n, δ)` and the monomial supports they induce.
//!
//! Rows (equations) and blocks are 0-based in the API. Error messages report
//! 1-based indices, matching the usual mathematical notation.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

/// Default cap on the number of monomials in one support.
pub const DEFAULT_SUPPORT_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("shape has no blocks (k = 0)")]
    EmptyShape,
    #[error("block sizes sum to {expected} but the degree matrix has {rows} rows")]
    DimensionMismatch { expected: usize, rows: usize },
    #[error("row {row} of the degree matrix has {len} entries, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("degree at row {row}, block {block} is negative ({value})")]
    NegativeDegree { row: usize, block: usize, value: i64 },
    #[error("degree at row {row}, block {block} is too large ({value})")]
    DegreeTooLarge { row: usize, block: usize, value: i64 },
    #[error("block {block} has negative size ({value})")]
    NegativeBlockSize { block: usize, value: i64 },
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("support of row {row} has {size} monomials, above the cap of {cap}")]
    SupportTooLarge { row: usize, size: u128, cap: u64 },
    #[error("expected {expected} multipliers, got {got}")]
    MultiplierLength { expected: usize, got: usize },
}

/// Unvalidated shape as it appears in JSON input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawShape {
    pub block_sizes: Vec<i64>,
    pub degrees: Vec<Vec<i64>>,
}

/// A validated multihomogeneous shape: block sizes `n_1..n_k` with
/// `Σ n_j = n`, and an `n x k` matrix of nonnegative degrees.
///
/// Blocks of size zero are kept; they contribute no variables or columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawShape", into = "RawShape")]
pub struct ShapeSpec {
    block_sizes: Vec<usize>,
    degrees: Vec<u32>,
}

impl TryFrom<RawShape> for ShapeSpec {
    type Error = ShapeError;

    fn try_from(raw: RawShape) -> Result<Self, ShapeError> {
        validate(&raw)
    }
}

impl From<ShapeSpec> for RawShape {
    fn from(spec: ShapeSpec) -> Self {
        RawShape {
            block_sizes: spec.block_sizes.iter().map(|&s| s as i64).collect(),
            degrees: (0..spec.n()).map(|i| spec.row(i).iter().map(|&d| d as i64).collect()).collect(),
        }
    }
}

/// Checks a raw shape against the shape invariants.
pub fn validate(raw: &RawShape) -> Result<ShapeSpec, ShapeError> {
    let k = raw.block_sizes.len();
    if k == 0 {
        return Err(ShapeError::EmptyShape);
    }
    let mut block_sizes = Vec::with_capacity(k);
    for (j, &s) in raw.block_sizes.iter().enumerate() {
        if s < 0 {
            return Err(ShapeError::NegativeBlockSize { block: j + 1, value: s });
        }
        block_sizes.push(s as usize);
    }
    let n: usize = block_sizes.iter().sum();
    if raw.degrees.len() != n {
        return Err(ShapeError::DimensionMismatch { expected: n, rows: raw.degrees.len() });
    }
    let mut degrees = Vec::with_capacity(n * k);
    for (i, row) in raw.degrees.iter().enumerate() {
        if row.len() != k {
            return Err(ShapeError::RaggedRow { row: i + 1, len: row.len(), expected: k });
        }
        for (j, &d) in row.iter().enumerate() {
            if d < 0 {
                return Err(ShapeError::NegativeDegree { row: i + 1, block: j + 1, value: d });
            }
            if d > u32::MAX as i64 {
                return Err(ShapeError::DegreeTooLarge { row: i + 1, block: j + 1, value: d });
            }
            degrees.push(d as u32);
        }
    }
    Ok(ShapeSpec { block_sizes, degrees })
}

impl ShapeSpec {
    /// Builds and validates a shape from block sizes and degree rows.
    pub fn new(block_sizes: Vec<usize>, degrees: Vec<Vec<u32>>) -> Result<Self, ShapeError> {
        let raw = RawShape {
            block_sizes: block_sizes.iter().map(|&s| s as i64).collect(),
            degrees: degrees.iter().map(|r| r.iter().map(|&d| d as i64).collect()).collect(),
        };
        validate(&raw)
    }

    /// Number of equations (and of non-homogenizing variables).
    pub fn n(&self) -> usize {
        self.degrees.len().checked_div(self.k()).unwrap_or(0)
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn degree(&self, row: usize, block: usize) -> u32 {
        self.degrees[row * self.k() + block]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let k = self.k();
        &self.degrees[i * k..(i + 1) * k]
    }

    pub fn degree_matrix(&self) -> Matrix<u32> {
        Matrix::from_vec(self.n(), self.k(), self.degrees.clone())
    }

    /// Block indices with at least one variable.
    pub fn positive_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.block_sizes.iter().enumerate().filter(|(_, &s)| s > 0).map(|(j, _)| j)
    }

    /// The block `q(i)` that row `i` belongs to: the unique `j` with
    /// `n_1 + .. + n_{j-1} <= i < n_1 + .. + n_j` (0-based).
    pub fn block_of(&self, i: usize) -> Result<usize, ShapeError> {
        let mut upper = 0;
        for (j, &s) in self.block_sizes.iter().enumerate() {
            upper += s;
            if i < upper {
                return Ok(j);
            }
        }
        Err(ShapeError::IndexOutOfRange { index: i + 1, len: self.n() })
    }

    /// Block owning each of the `n` expanded columns, in column order.
    pub fn column_blocks(&self) -> Vec<usize> {
        self.block_sizes.iter().enumerate().flat_map(|(j, &s)| std::iter::repeat_n(j, s)).collect()
    }

    /// `n_1! * .. * n_k!`
    pub fn block_factorial_product(&self) -> BigUint {
        self.block_sizes.iter().map(|&s| factorial(s as u32)).product()
    }

    /// Integer expansion Δ(n, δ): column `j` of δ repeated `n_j` times.
    pub fn expanded_degrees(&self) -> Matrix<u64> {
        let cols = self.column_blocks();
        Matrix::from_fn(self.n(), self.n(), |i, c| self.degree(i, cols[c]) as u64)
    }

    /// Real expansion of δ, or of its entrywise square root when `sqrt` is set.
    pub fn expand_delta(&self, sqrt: bool) -> ExpandedMatrix {
        let cols = self.column_blocks();
        let entries = Matrix::from_fn(self.n(), self.n(), |i, c| {
            let d = self.degree(i, cols[c]) as f64;
            if sqrt {
                d.sqrt()
            } else {
                d
            }
        });
        ExpandedMatrix { entries, column_blocks: cols }
    }

    /// `(n - e_j, δ^{-i})`: drop row `i` and one variable from block `j`.
    pub fn reduced(&self, row: usize, block: usize) -> ShapeSpec {
        assert!(row < self.n() && self.block_sizes[block] > 0);
        let mut block_sizes = self.block_sizes.clone();
        block_sizes[block] -= 1;
        let degrees = (0..self.n()).filter(|&i| i != row).flat_map(|i| self.row(i).iter().copied()).collect();
        ShapeSpec { block_sizes, degrees }
    }

    /// Restriction to the given rows and blocks, in the given order.
    pub fn restrict(&self, rows: &[usize], blocks: &[usize]) -> ShapeSpec {
        let block_sizes: Vec<usize> = blocks.iter().map(|&j| self.block_sizes[j]).collect();
        let degrees = rows.iter().flat_map(|&i| blocks.iter().map(move |&j| self.degree(i, j))).collect();
        let spec = ShapeSpec { block_sizes, degrees };
        debug_assert_eq!(spec.n(), rows.len());
        spec
    }

    /// Stable 64-bit fingerprint of the canonical content, used to derive
    /// sub-instance seeds.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0x6a09_e667_f3bc_c908u64 ^ (self.k() as u64);
        for &s in &self.block_sizes {
            h = mix64(h ^ s as u64);
        }
        h = mix64(h ^ 0xff);
        for &d in &self.degrees {
            h = mix64(h ^ d as u64);
        }
        h
    }

    /// Number of monomials in the support of row `i`: `∏_j C(δ_ij + n_j, n_j)`.
    pub fn support_size(&self, i: usize) -> Result<u128, ShapeError> {
        if i >= self.n() {
            return Err(ShapeError::IndexOutOfRange { index: i + 1, len: self.n() });
        }
        let mut total = BigUint::one();
        for (j, &s) in self.block_sizes.iter().enumerate() {
            total *= binomial(self.degree(i, j) as u64 + s as u64, s as u64);
        }
        Ok(total.to_u128().unwrap_or(u128::MAX))
    }

    /// All exponent vectors of row `i`, capped at [`DEFAULT_SUPPORT_CAP`].
    pub fn enumerate_support(&self, i: usize) -> Result<Vec<ExponentVector>, ShapeError> {
        self.enumerate_support_capped(i, DEFAULT_SUPPORT_CAP)
    }

    /// All exponent vectors of row `i`, block 0 varying slowest; within a
    /// block, compositions are listed with the leading entry descending.
    pub fn enumerate_support_capped(&self, i: usize, cap: u64) -> Result<Vec<ExponentVector>, ShapeError> {
        let size = self.support_size(i)?;
        if size > cap as u128 {
            return Err(ShapeError::SupportTooLarge { row: i + 1, size, cap });
        }
        let per_block: Vec<Vec<Vec<u32>>> = self
            .block_sizes
            .iter()
            .enumerate()
            .map(|(j, &s)| compositions(self.degree(i, j), s + 1))
            .collect();
        let mut out = Vec::with_capacity(size as usize);
        let mut idx = vec![0usize; self.k()];
        loop {
            out.push(ExponentVector {
                blocks: idx.iter().zip(&per_block).map(|(&t, comps)| comps[t].clone()).collect(),
            });
            // odometer, last block fastest
            let mut j = self.k();
            loop {
                if j == 0 {
                    return Ok(out);
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < per_block[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={:?} δ=[", self.block_sizes)?;
        for i in 0..self.n() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Degree pattern of the quasiequilibrium systems of a normal form game:
/// degree 0 in the row's own block, 1 in every other block.
pub fn game_shape(block_sizes: &[usize]) -> Result<ShapeSpec, ShapeError> {
    let k = block_sizes.len();
    if k == 0 {
        return Err(ShapeError::EmptyShape);
    }
    let rows = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(own, &s)| std::iter::repeat_n(own, s))
        .map(|own| (0..k).map(|j| u32::from(j != own)).collect())
        .collect();
    ShapeSpec::new(block_sizes.to_vec(), rows)
}

/// Column-expanded `n x n` matrix; every column in a block group is identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedMatrix {
    pub entries: Matrix<f64>,
    /// Owning block of each column.
    pub column_blocks: Vec<usize>,
}

/// An exponent vector `a = (a_{jh})`, `j` over blocks, `h = 0..=n_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExponentVector {
    pub blocks: Vec<Vec<u32>>,
}

impl ExponentVector {
    pub fn new(blocks: Vec<Vec<u32>>) -> Self {
        ExponentVector { blocks }
    }

    pub fn block_degree(&self, j: usize) -> u32 {
        self.blocks[j].iter().sum()
    }

    /// Inverse weight `η(a)^{-1} = ∏_j multinomial(a_j)`; this is the Kostlan
    /// variance of the coefficient of `x^a`.
    pub fn inverse_weight(&self) -> BigUint {
        self.blocks.iter().map(|b| multinomial(b)).product()
    }

    /// The invariant weight `η(a) = ∏_j (a_{j0}! .. a_{jn_j}!) / (Σ_h a_{jh})!`, exactly.
    pub fn weight_eta(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.inverse_weight()))
    }

    pub fn kostlan_variance(&self) -> f64 {
        self.inverse_weight().to_f64().unwrap_or(f64::INFINITY)
    }

    /// `ζ^a = ∏ ζ_{jh}^{a_{jh}}` for per-block coordinates `point[j][h]`.
    pub fn monomial(&self, point: &[Vec<f64>]) -> f64 {
        let mut v = 1.0;
        for (exps, coords) in self.blocks.iter().zip(point) {
            for (&a, &z) in exps.iter().zip(coords) {
                v *= z.powi(a as i32);
            }
        }
        v
    }
}

/// Compositions of `total` into `parts` nonnegative parts, leading entry descending.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(remaining - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

pub(crate) fn factorial(m: u32) -> BigUint {
    (1..=m).map(BigUint::from).product()
}

pub(crate) fn binomial(n: u64, r: u64) -> BigUint {
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for t in 0..r {
        acc *= n - t;
        acc /= t + 1;
    }
    acc
}

fn multinomial(parts: &[u32]) -> BigUint {
    let total: u32 = parts.iter().sum();
    let denom: BigUint = parts.iter().map(|&p| factorial(p)).product();
    factorial(total) / denom
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw(bs: &[i64], rows: &[&[i64]]) -> RawShape {
        RawShape { block_sizes: bs.to_vec(), degrees: rows.iter().map(|r| r.to_vec()).collect() }
    }

    #[test]
    fn validate_examples() {
        let s = validate(&raw(&[1], &[&[3]])).unwrap();
        assert_eq!((s.n(), s.k()), (1, 1));
        assert!(validate(&raw(&[1, 1], &[&[1, 1], &[1, 1]])).is_ok());
        assert_eq!(
            validate(&raw(&[2], &[&[1], &[1], &[1]])),
            Err(ShapeError::DimensionMismatch { expected: 2, rows: 3 })
        );
        assert_eq!(validate(&raw(&[], &[])), Err(ShapeError::EmptyShape));
        assert!(matches!(
            validate(&raw(&[1, 1], &[&[1, -1], &[1, 1]])),
            Err(ShapeError::NegativeDegree { row: 1, block: 2, value: -1 })
        ));
        assert!(matches!(validate(&raw(&[2], &[&[1], &[1, 2]])), Err(ShapeError::RaggedRow { row: 2, .. })));
        // null system and zero-size blocks are legal
        let null = validate(&raw(&[0, 0], &[])).unwrap();
        assert_eq!((null.n(), null.k()), (0, 2));
    }

    #[test]
    fn json_round_trip_keeps_null_shape() {
        let null = ShapeSpec::new(vec![0, 0], vec![]).unwrap();
        let back: RawShape = null.clone().into();
        assert_eq!(validate(&back).unwrap(), null);
    }

    #[test]
    fn block_of_examples() {
        let s = ShapeSpec::new(vec![2, 3], vec![vec![0, 0]; 5]).unwrap();
        assert_eq!(s.block_of(1).unwrap(), 0);
        assert_eq!(s.block_of(2).unwrap(), 1);
        let t = ShapeSpec::new(vec![1, 1], vec![vec![0, 0]; 2]).unwrap();
        assert_eq!(t.block_of(1).unwrap(), 1);
        let err = s.block_of(5).unwrap_err();
        assert_eq!(err, ShapeError::IndexOutOfRange { index: 6, len: 5 });
        assert!(err.to_string().contains("index 6"));
    }

    #[test]
    fn block_of_counts_rows_per_block() {
        let s = ShapeSpec::new(vec![2, 0, 3, 1], vec![vec![0; 4]; 6]).unwrap();
        for j in 0..s.k() {
            let count = (0..s.n()).filter(|&i| s.block_of(i).unwrap() == j).count();
            assert_eq!(count, s.block_sizes()[j]);
        }
    }

    #[test]
    fn game_shape_examples() {
        let g = game_shape(&[1, 1]).unwrap();
        assert_eq!(g.degree_matrix().to_rows(), vec![vec![0, 1], vec![1, 0]]);
        let g = game_shape(&[2, 2]).unwrap();
        assert_eq!(g.degree_matrix().to_rows(), vec![vec![0, 1], vec![0, 1], vec![1, 0], vec![1, 0]]);
        let g = game_shape(&[1]).unwrap();
        assert_eq!(g.degree_matrix().to_rows(), vec![vec![0]]);
    }

    #[test]
    fn expand_delta_examples() {
        let s = ShapeSpec::new(vec![1, 1], vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(s.expand_delta(false).entries.to_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let s = ShapeSpec::new(vec![2], vec![vec![2], vec![3]]).unwrap();
        assert_eq!(s.expand_delta(false).entries.to_rows(), vec![vec![2.0, 2.0], vec![3.0, 3.0]]);
        let s = ShapeSpec::new(vec![1, 1], vec![vec![4, 1], vec![1, 4]]).unwrap();
        assert_eq!(s.expand_delta(true).entries.to_rows(), vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        // zero-size blocks contribute no columns
        let s = ShapeSpec::new(vec![1, 0, 1], vec![vec![1, 7, 2], vec![3, 7, 4]]).unwrap();
        assert_eq!(s.expanded_degrees().to_rows(), vec![vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn enumerate_support_examples() {
        let s = ShapeSpec::new(vec![1], vec![vec![2]]).unwrap();
        let sup = s.enumerate_support(0).unwrap();
        let got: Vec<_> = sup.iter().map(|a| a.blocks[0].clone()).collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let s = ShapeSpec::new(vec![1, 1], vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(s.enumerate_support(0).unwrap().len(), 4);
        let s = ShapeSpec::new(vec![2], vec![vec![3], vec![0]]).unwrap();
        assert_eq!(s.enumerate_support(0).unwrap().len(), 10);
        assert_eq!(s.enumerate_support(1).unwrap().len(), 1);
        assert!(matches!(s.enumerate_support_capped(0, 9), Err(ShapeError::SupportTooLarge { size: 10, .. })));
    }

    #[test]
    fn weight_examples() {
        let a = ExponentVector::new(vec![vec![1, 1, 1]]);
        assert_eq!(a.weight_eta(), BigRational::new(1.into(), 6.into()));
        let a = ExponentVector::new(vec![vec![5, 0, 0]]);
        assert_eq!(a.weight_eta(), BigRational::one());
        let a = ExponentVector::new(vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(a.weight_eta(), BigRational::one());
        // Kostlan variances of a binary quadratic are (1, 2, 1)
        let s = ShapeSpec::new(vec![1], vec![vec![2]]).unwrap();
        let v: Vec<f64> = s.enumerate_support(0).unwrap().iter().map(|a| a.kostlan_variance()).collect();
        assert_eq!(v, vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn large_degree_weight_is_exact() {
        let a = ExponentVector::new(vec![vec![30, 30, 30]]);
        let w = a.weight_eta();
        assert!(!w.is_zero());
        assert_eq!(a.inverse_weight(), factorial(90) / (factorial(30) * factorial(30) * factorial(30)));
    }

    fn random_unit_point(spec: &ShapeSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        spec.block_sizes()
            .iter()
            .map(|&s| {
                let v: Vec<f64> = (0..=s).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn eta_weighted_squares_sum_to_one(
            sizes in prop::collection::vec(0usize..3, 1..4),
            degs in prop::collection::vec(0u32..5, 4),
            seed in any::<u64>(),
        ) {
            prop_assume!(sizes.iter().sum::<usize>() >= 1);
            let k = sizes.len();
            let n: usize = sizes.iter().sum();
            let rows = vec![degs[..k].to_vec(); n];
            let spec = ShapeSpec::new(sizes, rows).unwrap();
            prop_assume!(spec.support_size(0).unwrap() <= 10_000);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let zeta = random_unit_point(&spec, &mut rng);
            let squared: Vec<Vec<f64>> = zeta.iter().map(|b| b.iter().map(|z| z * z).collect()).collect();
            let total: f64 = spec
                .enumerate_support(0)
                .unwrap()
                .iter()
                .map(|a| a.kostlan_variance() * a.monomial(&squared))
                .sum();
            prop_assert!((total - 1.0).abs() <= 1e-10, "sum = {}", total);
        }

        #[test]
        fn sqrt_expansion_squares_back(
            sizes in prop::collection::vec(0usize..3, 1..4),
            flat in prop::collection::vec(0u32..10, 36),
        ) {
            let k = sizes.len();
            let n: usize = sizes.iter().sum();
            let rows: Vec<Vec<u32>> = (0..n).map(|i| flat[i * k..(i + 1) * k].to_vec()).collect();
            let spec = ShapeSpec::new(sizes, rows).unwrap();
            let root = spec.expand_delta(true).entries;
            let plain = spec.expand_delta(false).entries;
            for (r, p) in root.as_slice().iter().zip(plain.as_slice()) {
                prop_assert!((r * r - p).abs() <= 1e-12 * p.max(1.0));
            }
        }

        #[test]
        fn support_cardinality_matches_binomials(
            sizes in prop::collection::vec(0usize..4, 1..4),
            degs in prop::collection::vec(0u32..5, 4),
        ) {
            prop_assume!(sizes.iter().sum::<usize>() >= 1);
            let k = sizes.len();
            let n: usize = sizes.iter().sum();
            let spec = ShapeSpec::new(sizes.clone(), vec![degs[..k].to_vec(); n]).unwrap();
            let expected: u64 = sizes
                .iter()
                .zip(&degs)
                .map(|(&s, &d)| binomial(d as u64 + s as u64, s as u64).to_u64().unwrap())
                .product();
            let support = spec.enumerate_support(0).unwrap();
            prop_assert_eq!(support.len() as u64, expected);
            for a in &support {
                for (j, &dj) in degs[..k].iter().enumerate() {
                    prop_assert_eq!(a.block_degree(j), dj);
                }
            }
        }
    }
}
