//! Expected number of real roots of random multihomogeneous polynomial systems.
//!
//! A problem instance is a [`ShapeSpec`]: block sizes `n_1..n_k` and an `n x k`
//! degree matrix. From it the crate computes
//!
//! * the generic complex root count (BKK number) through permanents and
//!   memoized recursions ([`bkk`]),
//! * the expected number of real roots under the orthogonally invariant
//!   (Kostlan) Gaussian ensemble, in closed form when the degree matrix has
//!   rank one and by Monte Carlo over a structured Gaussian determinant
//!   otherwise ([`expectation`], [`gaussian`]),
//! * two-sided permanent bounds on that expectation and the row-recursive
//!   inequalities behind them,
//! * ground-truth simulations that draw actual systems and count their real
//!   roots for the families where counting is exact ([`empirical`]).
//!
//! Every Monte Carlo routine derives one random stream per sample index from a
//! 64-bit seed, so results do not depend on the number of worker threads.

pub mod bkk;
pub mod corpus;
pub mod empirical;
pub mod expectation;
pub mod gaussian;
pub mod matrix;
pub mod montecarlo;
pub mod permanent;
pub mod shape;
pub mod specialfn;

pub use bkk::{bkk_permanent, bkk_recursive, is_simply_reducible, product_split, BkkValue, Pivot};
pub use expectation::{bounds, expectation, BoundsReport, ExpectationResult, McConfig};
pub use gaussian::{mc_abs_det, VarianceProfile};
pub use matrix::Matrix;
pub use montecarlo::MCEstimate;
pub use shape::{ExponentVector, ShapeError, ShapeSpec};
