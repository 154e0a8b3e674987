//! Matrix permanents.
//!
//! Square permanents use Ryser's inclusion–exclusion formula with Gray-code
//! column updates, `O(2^n n)`. Rectangular `m x n` permanents (`m < n`) are
//! the sum over injective row-to-column maps and are evaluated by expansion
//! along rows, memoized on the set of used columns. A literal sum over
//! injections is kept as a test oracle.

use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::matrix::Matrix;

/// Largest square size accepted by the Ryser routines.
pub const RYSER_CAP: usize = 34;
/// Largest column count for the rectangular expansion.
pub const EXPANSION_CAP: usize = 24;
/// Largest column count for the brute-force oracle.
pub const BRUTE_FORCE_CAP: usize = 9;

const GRAY_CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermanentError {
    #[error("{method} permanent limited to {cap} columns, got {size}; use the BKK recursion for larger shapes")]
    TooLarge { method: &'static str, size: usize, cap: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ryser,
    Expansion,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermanentResult<T> {
    pub value: T,
    pub method: Method,
    /// Relative error bound for floating-point evaluations.
    pub relative_error_bound: Option<f64>,
}

/// Exact permanent of a nonnegative integer matrix. Zero when `m > n`.
pub fn permanent_exact(d: &Matrix<u64>) -> Result<BigUint, PermanentError> {
    permanent_exact_with_method(d).map(|r| r.value)
}

pub fn permanent_exact_with_method(d: &Matrix<u64>) -> Result<PermanentResult<BigUint>, PermanentError> {
    let (m, n) = (d.rows(), d.cols());
    if m > n {
        return Ok(PermanentResult { value: BigUint::zero(), method: Method::Expansion, relative_error_bound: None });
    }
    if m < n {
        if n > EXPANSION_CAP {
            return Err(PermanentError::TooLarge { method: "rectangular", size: n, cap: EXPANSION_CAP });
        }
        return Ok(PermanentResult { value: expansion(d), method: Method::Expansion, relative_error_bound: None });
    }
    if n > RYSER_CAP {
        return Err(PermanentError::TooLarge { method: "Ryser", size: n, cap: RYSER_CAP });
    }
    let value = ryser_exact(d);
    Ok(PermanentResult { value, method: Method::Ryser, relative_error_bound: None })
}

/// Row-expansion DP: `ways[mask]` is the weighted count of injections of the
/// first `popcount(mask)` rows onto the columns in `mask`.
fn expansion(d: &Matrix<u64>) -> BigUint {
    let (m, n) = (d.rows(), d.cols());
    let mut ways = vec![BigUint::zero(); 1 << n];
    ways[0] = BigUint::from(1u32);
    let mut total = BigUint::zero();
    for mask in 0usize..(1 << n) {
        if ways[mask].is_zero() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == m {
            total += &ways[mask];
            continue;
        }
        let cur = ways[mask].clone();
        for c in (0..n).filter(|c| mask & (1 << c) == 0) {
            let w = d[(row, c)];
            if w != 0 {
                ways[mask | (1 << c)] += &cur * w;
            }
        }
    }
    total
}

#[inline]
fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Signed accumulator that stays in `i128` until it overflows.
#[derive(Default)]
struct WideSum {
    fast: i128,
    spill: BigInt,
}

impl WideSum {
    fn add(&mut self, v: i128) {
        match self.fast.checked_add(v) {
            Some(s) => self.fast = s,
            None => {
                self.spill += BigInt::from(self.fast) + BigInt::from(v);
                self.fast = 0;
            }
        }
    }

    fn add_big(&mut self, v: BigInt) {
        self.spill += v;
    }

    fn total(self) -> BigInt {
        self.spill + BigInt::from(self.fast)
    }
}

fn ryser_exact(d: &Matrix<u64>) -> BigUint {
    let n = d.rows();
    if n == 0 {
        return BigUint::from(1u32);
    }
    let subsets = 1u64 << n;
    let chunks = subsets.div_ceil(GRAY_CHUNK);
    let partial: Vec<BigInt> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = (c * GRAY_CHUNK).max(1);
            let end = ((c + 1) * GRAY_CHUNK).min(subsets);
            let mut sums = vec![0i128; n];
            let g0 = gray(start - 1);
            for (col, _) in (0..n).map(|col| (col, g0 >> col & 1)).filter(|&(_, b)| b == 1) {
                for (i, s) in sums.iter_mut().enumerate() {
                    *s += d[(i, col)] as i128;
                }
            }
            let mut acc = WideSum::default();
            for idx in start..end {
                let col = idx.trailing_zeros() as usize;
                let g = gray(idx);
                let adding = g >> col & 1 == 1;
                for (i, s) in sums.iter_mut().enumerate() {
                    let v = d[(i, col)] as i128;
                    if adding {
                        *s += v;
                    } else {
                        *s -= v;
                    }
                }
                // sign (-1)^{n - |S|}
                let negative = (n - g.count_ones() as usize) % 2 == 1;
                let mut prod: Option<i128> = Some(1);
                for &s in &sums {
                    prod = prod.and_then(|p| p.checked_mul(s));
                    if prod == Some(0) {
                        break;
                    }
                }
                match prod {
                    Some(0) => {}
                    Some(p) => acc.add(if negative { -p } else { p }),
                    None => {
                        let p: BigInt = sums.iter().map(|&s| BigInt::from(s)).product();
                        acc.add_big(if negative { -p } else { p });
                    }
                }
            }
            acc.total()
        })
        .collect();
    let total: BigInt = partial.into_iter().sum();
    total.to_biguint().expect("permanent of a nonnegative matrix is nonnegative")
}

/// Permanent of a square real matrix by Ryser/Gray code. The float
/// summation order is fixed, so the result is reproducible.
pub fn permanent_float(d: &Matrix<f64>) -> Result<f64, PermanentError> {
    permanent_float_with_bound(d).map(|r| r.value)
}

pub fn permanent_float_with_bound(d: &Matrix<f64>) -> Result<PermanentResult<f64>, PermanentError> {
    if !d.is_square() {
        return Err(PermanentError::NotSquare { rows: d.rows(), cols: d.cols() });
    }
    let n = d.rows();
    if n > RYSER_CAP {
        return Err(PermanentError::TooLarge { method: "Ryser", size: n, cap: RYSER_CAP });
    }
    let bound = n as f64 * 2f64.powi(n as i32) * f64::EPSILON;
    if n == 0 {
        return Ok(PermanentResult { value: 1.0, method: Method::Ryser, relative_error_bound: Some(0.0) });
    }
    let subsets = 1u64 << n;
    let chunks = subsets.div_ceil(GRAY_CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = (c * GRAY_CHUNK).max(1);
            let end = ((c + 1) * GRAY_CHUNK).min(subsets);
            let mut sums = vec![0f64; n];
            let g0 = gray(start - 1);
            for col in (0..n).filter(|col| g0 >> col & 1 == 1) {
                for (i, s) in sums.iter_mut().enumerate() {
                    *s += d[(i, col)];
                }
            }
            let mut acc = 0.0;
            for idx in start..end {
                let col = idx.trailing_zeros() as usize;
                let g = gray(idx);
                let sign = if g >> col & 1 == 1 { 1.0 } else { -1.0 };
                for (i, s) in sums.iter_mut().enumerate() {
                    *s += sign * d[(i, col)];
                }
                let prod: f64 = sums.iter().product();
                if (n - g.count_ones() as usize) % 2 == 1 {
                    acc -= prod;
                } else {
                    acc += prod;
                }
            }
            acc
        })
        .collect();
    let value: f64 = partial.into_iter().sum();
    Ok(PermanentResult { value, method: Method::Ryser, relative_error_bound: Some(bound) })
}

/// Literal sum over all injections `σ: rows -> cols`. Zero when `m > n`.
pub fn permanent_bruteforce<T>(d: &Matrix<T>) -> Result<T, PermanentError>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T> + num_traits::One,
{
    let (m, n) = (d.rows(), d.cols());
    if n > BRUTE_FORCE_CAP {
        return Err(PermanentError::TooLarge { method: "brute-force", size: n, cap: BRUTE_FORCE_CAP });
    }
    if m > n {
        return Ok(T::zero());
    }
    fn rec<T>(d: &Matrix<T>, row: usize, used: &mut [bool], prefix: T, total: &mut T)
    where
        T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
    {
        if row == d.rows() {
            *total = total.clone() + prefix;
            return;
        }
        for c in 0..d.cols() {
            if !used[c] {
                used[c] = true;
                rec(d, row + 1, used, prefix.clone() * d[(row, c)].clone(), total);
                used[c] = false;
            }
        }
    }
    let mut total = T::zero();
    rec(d, 0, &mut vec![false; n], T::one(), &mut total);
    Ok(total)
}

/// Rows and columns of an all-zero block `k x (n + 1 - k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZeroBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Finds an all-zero `k x (n + 1 - k)` block (after relabelling), which
/// exists exactly when the 0/1 pattern has no full row transversal, i.e.
/// when its permanent vanishes. Returns `None` when a transversal exists.
pub fn has_zero_block(a: &Matrix<bool>) -> Option<ZeroBlock> {
    let (m, n) = (a.rows(), a.cols());
    let mut col_match: Vec<Option<usize>> = vec![None; n];
    let mut row_match: Vec<Option<usize>> = vec![None; m];

    fn augment(
        a: &Matrix<bool>,
        r: usize,
        seen: &mut [bool],
        col_match: &mut [Option<usize>],
        row_match: &mut [Option<usize>],
    ) -> bool {
        for c in 0..a.cols() {
            if a[(r, c)] && !seen[c] {
                seen[c] = true;
                if col_match[c].is_none_or(|r2| augment(a, r2, seen, col_match, row_match)) {
                    col_match[c] = Some(r);
                    row_match[r] = Some(c);
                    return true;
                }
            }
        }
        false
    }

    for r in 0..m {
        let mut seen = vec![false; n];
        augment(a, r, &mut seen, &mut col_match, &mut row_match);
    }
    let free = row_match.iter().position(Option::is_none)?;

    // alternating search from one exposed row: reachable rows R, columns C,
    // every column in C is matched into R, so |C| < |R| and R x C' is zero
    let mut row_seen = vec![false; m];
    let mut col_seen = vec![false; n];
    let mut stack = vec![free];
    row_seen[free] = true;
    while let Some(r) = stack.pop() {
        for c in 0..n {
            if a[(r, c)] && !col_seen[c] {
                col_seen[c] = true;
                let r2 = col_match[c].expect("exposed column would give an augmenting path");
                if !row_seen[r2] {
                    row_seen[r2] = true;
                    stack.push(r2);
                }
            }
        }
    }
    let rows: Vec<usize> = (0..m).filter(|&r| row_seen[r]).collect();
    let width = (n + 1).saturating_sub(rows.len());
    let cols: Vec<usize> = (0..n).filter(|&c| !col_seen[c]).take(width).collect();
    Some(ZeroBlock { rows, cols })
}

/// Zero pattern (`true` where nonzero) of a nonnegative matrix.
pub fn support_pattern(d: &Matrix<u64>) -> Matrix<bool> {
    d.map(|&v| v != 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: Vec<Vec<u64>>) -> Matrix<u64> {
        Matrix::from_rows(rows)
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max: u64) -> Matrix<u64> {
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(0..=max))
    }

    #[test]
    fn exact_examples() {
        assert_eq!(permanent_exact(&m(vec![vec![1, 2], vec![3, 4]])).unwrap(), big(10));
        let id = Matrix::from_fn(6, 6, |i, j| u64::from(i == j));
        assert_eq!(permanent_exact(&id).unwrap(), big(1));
        assert_eq!(permanent_exact(&m(vec![vec![0, 1], vec![1, 0]])).unwrap(), big(1));
        assert_eq!(permanent_exact(&Matrix::from_vec(0, 0, vec![])).unwrap(), big(1));
    }

    #[test]
    fn float_examples() {
        let f = |r: Vec<Vec<f64>>| permanent_float(&Matrix::from_rows(r)).unwrap();
        assert_eq!(f(vec![vec![1.0, 1.0], vec![1.0, 1.0]]), 2.0);
        assert_eq!(f(vec![vec![2.0, 1.0], vec![1.0, 2.0]]), 5.0);
        let spec = crate::shape::ShapeSpec::new(vec![1, 1], vec![vec![4, 1], vec![1, 4]]).unwrap();
        assert_eq!(permanent_float(&spec.expand_delta(true).entries).unwrap(), 5.0);
        assert!(matches!(
            permanent_float(&Matrix::from_vec(1, 2, vec![1.0, 1.0])),
            Err(PermanentError::NotSquare { .. })
        ));
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(permanent_bruteforce(&m(vec![vec![7]])).unwrap(), 7);
        assert_eq!(permanent_bruteforce(&m(vec![vec![1, 1, 1], vec![1, 1, 1]])).unwrap(), 6);
        assert_eq!(permanent_bruteforce(&m(vec![vec![1, 1], vec![1, 1], vec![1, 1]])).unwrap(), 0);
        assert!(matches!(
            permanent_bruteforce(&Matrix::from_fn(10, 10, |_, _| 1u64)),
            Err(PermanentError::TooLarge { size: 10, .. })
        ));
    }

    #[test]
    fn caps_are_enforced() {
        let big_m = Matrix::from_fn(35, 35, |_, _| 1u64);
        let err = permanent_exact(&big_m).unwrap_err();
        assert!(err.to_string().contains("BKK recursion"));
        assert_eq!(permanent_exact(&Matrix::from_fn(3, 2, |_, _| 1u64)).unwrap(), big(0));
    }

    #[test]
    fn rectangular_matches_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let cols = rng.random_range(1..=7);
            let rows = rng.random_range(0..=cols);
            let d = random_matrix(&mut rng, rows, cols, 4);
            let r = permanent_exact_with_method(&d).unwrap();
            assert_eq!(r.value, big(permanent_bruteforce(&d).unwrap()));
        }
    }

    #[test]
    fn ryser_matches_bruteforce_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..250 {
            let n = rng.random_range(1..=7);
            let d = random_matrix(&mut rng, n, n, 4);
            assert_eq!(permanent_exact(&d).unwrap(), big(permanent_bruteforce(&d).unwrap()));
            let f = permanent_float(&d.map(|&v| v as f64)).unwrap();
            let exact = permanent_bruteforce(&d).unwrap() as f64;
            assert!((f - exact).abs() <= 1e-9 * exact.max(1.0));
        }
    }

    #[test]
    fn ryser_handles_overflowing_products() {
        // all entries 2^40: per = n! 2^(40 n) which overflows i128 for n = 4
        let n = 4;
        let v = 1u64 << 40;
        let d = Matrix::from_fn(n, n, |_, _| v);
        let expected = BigUint::from(24u32) * BigUint::from(v).pow(4);
        assert_eq!(permanent_exact(&d).unwrap(), expected);
        let bf: BigUint = permanent_bruteforce(&d.map(|&x| BigUint::from(x))).unwrap();
        assert_eq!(bf, expected);
    }

    #[test]
    fn row_expansion_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let n = rng.random_range(2..=6);
            let d = random_matrix(&mut rng, n, n, 3);
            let per = permanent_exact(&d).unwrap();
            for i in 0..n {
                let expanded: BigUint =
                    (0..n).map(|j| permanent_exact(&d.minor(i, j)).unwrap() * d[(i, j)]).sum();
                assert_eq!(expanded, per);
            }
        }
    }

    #[test]
    fn zero_block_examples() {
        let pat = |r: Vec<Vec<u8>>| Matrix::from_rows(r).map(|&v| v != 0);
        assert_eq!(has_zero_block(&pat(vec![vec![0, 1], vec![1, 0]])), None);
        let w = has_zero_block(&pat(vec![vec![1, 1], vec![0, 0]])).unwrap();
        assert_eq!(w, ZeroBlock { rows: vec![1], cols: vec![0, 1] });
        let game = pat(vec![vec![0, 1, 1], vec![1, 0, 0], vec![1, 0, 0]]);
        let w = has_zero_block(&game).unwrap();
        assert_eq!(w.rows.len() + w.cols.len(), 4);
        for &r in &w.rows {
            for &c in &w.cols {
                assert!(!game[(r, c)]);
            }
        }
    }

    fn check_zero_block_equivalence(a: &Matrix<bool>) {
        let per = permanent_bruteforce(&a.map(|&b| u64::from(b))).unwrap();
        match has_zero_block(a) {
            None => assert!(per > 0, "{a:?}"),
            Some(w) => {
                assert_eq!(per, 0, "{a:?}");
                let k = w.rows.len();
                assert_eq!(w.cols.len(), (a.cols() + 1).saturating_sub(k));
                for &r in &w.rows {
                    for &c in &w.cols {
                        assert!(!a[(r, c)]);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_block_iff_zero_permanent_exhaustive() {
        for n in 1..=3usize {
            for bits in 0u32..(1 << (n * n)) {
                let a = Matrix::from_fn(n, n, |i, j| bits >> (i * n + j) & 1 == 1);
                check_zero_block_equivalence(&a);
            }
        }
    }

    #[test]
    fn zero_block_iff_zero_permanent_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let n = rng.random_range(4..=5);
            let p = rng.random_range(0.2..0.7);
            let a = Matrix::from_fn(n, n, |_, _| rng.random_bool(p));
            check_zero_block_equivalence(&a);
        }
    }

    proptest! {
        #[test]
        fn invariant_under_permutations(
            n in 1usize..7,
            flat in prop::collection::vec(0u64..5, 49),
            seed in any::<u64>(),
        ) {
            let d = Matrix::from_fn(n, n, |i, j| flat[i * 7 + j]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rp: Vec<usize> = (0..n).collect();
            let mut cp: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                rp.swap(i, rng.random_range(0..=i));
                cp.swap(i, rng.random_range(0..=i));
            }
            prop_assert_eq!(permanent_exact(&d).unwrap(), permanent_exact(&d.permuted(&rp, &cp)).unwrap());
            prop_assert_eq!(permanent_exact(&d).unwrap(), permanent_exact(&d.transpose()).unwrap());
        }

        #[test]
        fn row_scaling_scales_permanent(
            n in 1usize..7,
            flat in prop::collection::vec(0u64..5, 49),
            row in 0usize..7,
            c in 0u64..9,
        ) {
            let row = row % n;
            let d = Matrix::from_fn(n, n, |i, j| flat[i * 7 + j]);
            let scaled = Matrix::from_fn(n, n, |i, j| if i == row { c * d[(i, j)] } else { d[(i, j)] });
            prop_assert_eq!(permanent_exact(&scaled).unwrap(), permanent_exact(&d).unwrap() * c);
        }
    }
}
