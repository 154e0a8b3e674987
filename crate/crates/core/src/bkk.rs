//! Generic complex root counts of multihomogeneous systems.
//!
//! `BKK(n, δ) = per Δ(n, δ) / (n_1! .. n_k!)`, where `Δ(n, δ)` repeats column
//! `j` of δ `n_j` times. The same number satisfies the row recursion
//!
//! ```text
//! BKK(n, δ) = Σ_{j : n_j > 0} δ_ij · BKK(n - e_j, δ^{-i})
//! ```
//!
//! and a column recursion with a `1/n_j` factor; both are evaluated here with
//! big integers and a memo keyed by the multiset of remaining rows and the
//! residual block sizes, since rows are exchangeable.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::permanent::{self, PermanentError};
use crate::shape::{ShapeError, ShapeSpec};

/// Largest number of positive-size blocks for the exhaustive split search.
pub const SPLIT_SEARCH_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    Permanent,
    RowRecursion,
    ColumnRecursion,
    ProductSplit,
    Scaling,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BkkValue {
    #[serde(serialize_with = "serialize_biguint")]
    pub count: BigUint,
    pub derivation: Derivation,
}

pub(crate) fn serialize_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivot {
    Row(usize),
    Column(usize),
}

/// `per Δ(n, δ) / ∏ n_j!`.
pub fn bkk_permanent(spec: &ShapeSpec) -> Result<BkkValue, PermanentError> {
    let per = permanent::permanent_exact(&spec.expanded_degrees())?;
    let denom = spec.block_factorial_product();
    let (count, rem) = per.div_rem(&denom);
    assert!(rem.is_zero(), "permanent of Δ(n, δ) not divisible by ∏ n_j! for {spec}");
    Ok(BkkValue { count, derivation: Derivation::Permanent })
}

/// Row multiset and residual block sizes, with rows stored as counts over
/// the distinct rows of the original degree matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct State {
    pub counts: Vec<u16>,
    pub sizes: Vec<u16>,
}

impl State {
    fn is_null(&self) -> bool {
        self.sizes.iter().all(|&s| s == 0)
    }

    fn reduced(&self, t: usize, j: usize) -> State {
        let mut next = self.clone();
        next.counts[t] -= 1;
        next.sizes[j] -= 1;
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Row,
    Column,
}

/// Memoized evaluator for all sub-shapes `(n - Σ e_j, δ minus some rows)`
/// of one instance.
pub(crate) struct BkkEngine {
    pub types: Vec<Vec<u32>>,
    /// Distinct-row index of every original row.
    pub row_type: Vec<usize>,
    mode: Mode,
    memo: HashMap<State, BigUint>,
}

impl BkkEngine {
    pub fn new(spec: &ShapeSpec) -> Self {
        Self::with_mode(spec, Mode::Row)
    }

    fn with_mode(spec: &ShapeSpec, mode: Mode) -> Self {
        let mut types: Vec<Vec<u32>> = Vec::new();
        let mut row_type = Vec::with_capacity(spec.n());
        for i in 0..spec.n() {
            let row = spec.row(i);
            let t = match types.iter().position(|r| r.as_slice() == row) {
                Some(t) => t,
                None => {
                    types.push(row.to_vec());
                    types.len() - 1
                }
            };
            row_type.push(t);
        }
        BkkEngine { types, row_type, mode, memo: HashMap::new() }
    }

    pub fn initial_state(&self, spec: &ShapeSpec) -> State {
        let mut counts = vec![0u16; self.types.len()];
        for &t in &self.row_type {
            counts[t] += 1;
        }
        State { counts, sizes: spec.block_sizes().iter().map(|&s| s as u16).collect() }
    }

    pub fn bkk(&mut self, state: &State) -> BigUint {
        if state.is_null() {
            return BigUint::one();
        }
        if let Some(v) = self.memo.get(state) {
            return v.clone();
        }
        let value = match self.mode {
            Mode::Row => {
                let t = state.counts.iter().position(|&c| c > 0).expect("rows remain");
                self.expand_row(state, t)
            }
            Mode::Column => {
                let j = state.sizes.iter().position(|&s| s > 0).expect("variables remain");
                self.expand_column(state, j)
            }
        };
        self.memo.insert(state.clone(), value.clone());
        value
    }

    fn expand_row(&mut self, state: &State, t: usize) -> BigUint {
        let mut total = BigUint::zero();
        for j in 0..state.sizes.len() {
            let d = self.types[t][j];
            if state.sizes[j] > 0 && d > 0 {
                total += self.bkk(&state.reduced(t, j)) * d;
            }
        }
        total
    }

    fn expand_column(&mut self, state: &State, j: usize) -> BigUint {
        let mut total = BigUint::zero();
        for t in 0..self.types.len() {
            let d = self.types[t][j];
            if state.counts[t] > 0 && d > 0 {
                total += self.bkk(&state.reduced(t, j)) * (d as u64 * state.counts[t] as u64);
            }
        }
        let (q, r) = total.div_rem(&BigUint::from(state.sizes[j]));
        assert!(r.is_zero(), "column recursion produced a non-integer");
        q
    }
}

/// BKK number by the row recursion (`Pivot::Row(i)` expands row `i` first)
/// or the column recursion (`Pivot::Column(j)` expands block `j` first).
pub fn bkk_recursive(spec: &ShapeSpec, pivot: Pivot) -> Result<BkkValue, ShapeError> {
    let n = spec.n();
    match pivot {
        Pivot::Row(i) => {
            if i >= n {
                return Err(ShapeError::IndexOutOfRange { index: i + 1, len: n });
            }
            let mut engine = BkkEngine::with_mode(spec, Mode::Row);
            let state = engine.initial_state(spec);
            let count = engine.expand_row(&state, engine.row_type[i]);
            Ok(BkkValue { count, derivation: Derivation::RowRecursion })
        }
        Pivot::Column(j) => {
            if j >= spec.k() {
                return Err(ShapeError::IndexOutOfRange { index: j + 1, len: spec.k() });
            }
            let mut engine = BkkEngine::with_mode(spec, Mode::Column);
            let state = engine.initial_state(spec);
            let count = if state.is_null() {
                BigUint::one()
            } else if spec.block_sizes()[j] == 0 {
                engine.bkk(&state)
            } else {
                engine.expand_column(&state, j)
            };
            Ok(BkkValue { count, derivation: Derivation::ColumnRecursion })
        }
    }
}

/// BKK number of any shape, by the memoized row recursion. The null shape
/// (no variables, no equations) has one root.
pub fn bkk(spec: &ShapeSpec) -> BigUint {
    let mut engine = BkkEngine::new(spec);
    let state = engine.initial_state(spec);
    engine.bkk(&state)
}

/// A block-triangular decomposition: the `first_rows` only involve
/// `first_blocks`, and `Σ_{j in first_blocks} n_j = |first_rows|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub first: ShapeSpec,
    pub second: ShapeSpec,
    pub first_rows: Vec<usize>,
    pub first_blocks: Vec<usize>,
    pub second_rows: Vec<usize>,
    pub second_blocks: Vec<usize>,
    pub found_by: SplitSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSearch {
    Components,
    BlockSubsets,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProductSplit {
    pub split: Option<Split>,
    /// False when only connected components were searched.
    pub exhaustive: bool,
}

fn make_split(spec: &ShapeSpec, first_blocks: Vec<usize>, candidate_rows: &[usize], found_by: SplitSearch) -> Split {
    let n_first: usize = first_blocks.iter().map(|&j| spec.block_sizes()[j]).sum();
    let first_rows: Vec<usize> = candidate_rows[..n_first].to_vec();
    let second_rows: Vec<usize> = (0..spec.n()).filter(|i| !first_rows.contains(i)).collect();
    let second_blocks: Vec<usize> = (0..spec.k()).filter(|j| !first_blocks.contains(j)).collect();
    Split {
        first: spec.restrict(&first_rows, &first_blocks),
        second: spec.restrict(&second_rows, &second_blocks),
        first_rows,
        first_blocks,
        second_rows,
        second_blocks,
        found_by,
    }
}

/// Rows whose positive degrees all fall in `blocks` (blocks of size zero
/// are ignored).
fn rows_within(spec: &ShapeSpec, in_set: &[bool]) -> Vec<usize> {
    (0..spec.n())
        .filter(|&i| (0..spec.k()).all(|j| in_set[j] || spec.block_sizes()[j] == 0 || spec.degree(i, j) == 0))
        .collect()
}

/// Looks for a relabelling of blocks and rows that makes δ block lower
/// triangular, so that `BKK(n, δ) = BKK(n', δ¹¹) · BKK(n'', δ²²)` and
/// likewise for the expected real root count. Both parts have at least one
/// variable. Connected components of the row/block incidence graph are
/// tried first, then all subsets of positive-size blocks when there are at
/// most [`SPLIT_SEARCH_CAP`] of them.
pub fn product_split(spec: &ShapeSpec) -> ProductSplit {
    let n = spec.n();
    let k = spec.k();
    let positive: Vec<usize> = spec.positive_blocks().collect();
    let exhaustive = positive.len() <= SPLIT_SEARCH_CAP;
    if n < 2 {
        return ProductSplit { split: None, exhaustive: true };
    }

    // union-find over rows 0..n and blocks n..n+k
    let mut parent: Vec<usize> = (0..n + k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for &j in &positive {
            if spec.degree(i, j) > 0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
                parent[a] = b;
            }
        }
    }
    let mut seen_roots = Vec::new();
    for &j in &positive {
        let root = find(&mut parent, n + j);
        if seen_roots.contains(&root) {
            continue;
        }
        seen_roots.push(root);
        let blocks: Vec<usize> = positive.iter().copied().filter(|&b| find(&mut parent, n + b) == root).collect();
        let rows: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) == root).collect();
        let n_s: usize = blocks.iter().map(|&b| spec.block_sizes()[b]).sum();
        if rows.len() == n_s && n_s < n {
            return ProductSplit { split: Some(make_split(spec, blocks, &rows, SplitSearch::Components)), exhaustive };
        }
    }

    if exhaustive {
        for mask in 1u32..(1u32 << positive.len()).saturating_sub(1) {
            let blocks: Vec<usize> =
                positive.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &j)| j).collect();
            let n_s: usize = blocks.iter().map(|&b| spec.block_sizes()[b]).sum();
            let mut in_set = vec![false; k];
            blocks.iter().for_each(|&b| in_set[b] = true);
            let rows = rows_within(spec, &in_set);
            if rows.len() >= n_s {
                return ProductSplit {
                    split: Some(make_split(spec, blocks, &rows, SplitSearch::BlockSubsets)),
                    exhaustive,
                };
            }
        }
    }
    ProductSplit { split: None, exhaustive }
}

/// `δ'_ij = d_i · e_j · δ_ij`.
pub fn scale(spec: &ShapeSpec, d: &[u32], e: &[u32]) -> Result<ShapeSpec, ShapeError> {
    if d.len() != spec.n() {
        return Err(ShapeError::MultiplierLength { expected: spec.n(), got: d.len() });
    }
    if e.len() != spec.k() {
        return Err(ShapeError::MultiplierLength { expected: spec.k(), got: e.len() });
    }
    let rows = (0..spec.n()).map(|i| (0..spec.k()).map(|j| d[i] * e[j] * spec.degree(i, j)).collect()).collect();
    ShapeSpec::new(spec.block_sizes().to_vec(), rows)
}

/// Predicted BKK ratio under [`scale`]: `∏ d_i · ∏_{j : n_j > 0} e_j^{n_j}`.
pub fn scale_factor(spec: &ShapeSpec, d: &[u32], e: &[u32]) -> BigUint {
    let rows: BigUint = d.iter().map(|&x| BigUint::from(x)).product();
    let cols: BigUint = spec.positive_blocks().map(|j| BigUint::from(e[j]).pow(spec.block_sizes()[j] as u32)).product();
    rows * cols
}

/// One step of a simple reduction: row `row` is expanded, and `block` is
/// the only block with a nonzero term (`None` when every term vanishes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReductionStep {
    pub row: usize,
    pub block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reducibility {
    pub reducible: bool,
    /// Reduction sequence when reducible, in original row/block indices.
    pub witness: Vec<ReductionStep>,
}

/// Remaining (row, block) removals that empty the system, or `None`.
type Plan = Option<Vec<(usize, Option<usize>)>>;

struct ReducibilitySearch {
    engine: BkkEngine,
    memo: HashMap<State, Plan>,
}

impl ReducibilitySearch {
    /// Blocks `j` with `n_j > 0`, `δ_tj > 0` and a positive sub-count.
    fn admissible(&mut self, state: &State, t: usize) -> Vec<usize> {
        let candidates: Vec<usize> =
            (0..state.sizes.len()).filter(|&j| state.sizes[j] > 0 && self.engine.types[t][j] > 0).collect();
        candidates.into_iter().filter(|&j| !self.engine.bkk(&state.reduced(t, j)).is_zero()).collect()
    }

    fn search(&mut self, state: &State) -> Plan {
        if state.is_null() {
            return Some(Vec::new());
        }
        if let Some(v) = self.memo.get(state) {
            return v.clone();
        }
        let mut found = None;
        for t in (0..state.counts.len()).filter(|&t| state.counts[t] > 0) {
            match self.admissible(state, t).as_slice() {
                [] => {
                    found = Some(vec![(t, None)]);
                    break;
                }
                &[j] => {
                    if let Some(rest) = self.search(&state.reduced(t, j)) {
                        let mut steps = vec![(t, Some(j))];
                        steps.extend(rest);
                        found = Some(steps);
                        break;
                    }
                }
                _ => {}
            }
        }
        self.memo.insert(state.clone(), found.clone());
        found
    }
}

/// Decides simple reducibility: some row has at most one block `j` with
/// `n_j > 0`, `δ_ij > 0` and `BKK(n - e_j, δ^{-i}) > 0`, and the surviving
/// sub-shape is itself simply reducible. A row whose terms all vanish ends
/// the reduction (the count is zero, and all bounds coincide at zero).
pub fn is_simply_reducible(spec: &ShapeSpec) -> Reducibility {
    let engine = BkkEngine::new(spec);
    let state = engine.initial_state(spec);
    let mut search = ReducibilitySearch { engine, memo: HashMap::new() };
    match search.search(&state) {
        None => Reducibility { reducible: false, witness: Vec::new() },
        Some(steps) => {
            let mut used = vec![false; spec.n()];
            let witness = steps
                .into_iter()
                .map(|(t, block)| {
                    let row = (0..spec.n())
                        .find(|&i| !used[i] && search.engine.row_type[i] == t)
                        .expect("row of this type remains");
                    used[row] = true;
                    ReductionStep { row, block }
                })
                .collect();
            Reducibility { reducible: true, witness }
        }
    }
}
