//! Deterministic random shape generators for property checks and batch
//! verification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::shape::ShapeSpec;

/// A shape with `1 <= n <= n_max`, `1 <= k <= n` blocks and degrees drawn
/// uniformly from `0..=d_max`. Each variable is assigned to a uniformly
/// random block, so blocks of size zero occur.
pub fn random_shape<R: Rng>(rng: &mut R, n_max: usize, d_max: u32) -> ShapeSpec {
    let n = rng.random_range(1..=n_max.max(1));
    let k = rng.random_range(1..=n);
    let mut sizes = vec![0usize; k];
    for _ in 0..n {
        sizes[rng.random_range(0..k)] += 1;
    }
    let rows = (0..n).map(|_| (0..k).map(|_| rng.random_range(0..=d_max)).collect()).collect();
    ShapeSpec::new(sizes, rows).expect("generated shape is valid")
}

/// A shape whose degree matrix is `d eᵀ` with `d_i, e_j` in `1..=d_max`.
pub fn random_rank_one<R: Rng>(rng: &mut R, n_max: usize, d_max: u32) -> ShapeSpec {
    let n = rng.random_range(1..=n_max.max(1));
    let k = rng.random_range(1..=n);
    let mut sizes = vec![0usize; k];
    for _ in 0..n {
        sizes[rng.random_range(0..k)] += 1;
    }
    let d: Vec<u32> = (0..n).map(|_| rng.random_range(1..=d_max)).collect();
    let e: Vec<u32> = (0..k).map(|_| rng.random_range(1..=d_max)).collect();
    let rows = d.iter().map(|&di| e.iter().map(|&ej| di * ej).collect()).collect();
    ShapeSpec::new(sizes, rows).expect("generated shape is valid")
}

/// `count` shapes from [`random_shape`], reproducible from `seed`.
pub fn shape_corpus(count: usize, n_max: usize, d_max: u32, seed: u64) -> Vec<ShapeSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_shape(&mut rng, n_max, d_max)).collect()
}

/// `count` single-block shapes `n = (m)` with `1 <= m <= n_max` and degrees
/// in `1..=d_max`, reproducible from `seed`.
pub fn homogeneous_corpus(count: usize, n_max: usize, d_max: u32, seed: u64) -> Vec<ShapeSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=n_max.max(1));
            let rows = (0..n).map(|_| vec![rng.random_range(1..=d_max.max(1))]).collect();
            ShapeSpec::new(vec![n], rows).expect("generated shape is valid")
        })
        .collect()
}
