//! Deterministic parallel Monte Carlo.
//!
//! Sample `i` always draws from its own ChaCha8 stream, keyed by the run seed
//! and selected by stream number `i`. Samples are reduced in fixed-size
//! chunks, and chunk results are merged in index order, so the estimate is
//! bitwise identical for any worker count.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: u64 = 1024;

/// Mean of a sampled quantity with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Wall time in seconds. Not serialized so reports stay reproducible.
    #[serde(skip)]
    pub elapsed: f64,
}

impl MCEstimate {
    /// `|mean - target| <= sigmas * stderr`
    pub fn agrees_with(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.stderr
    }

    pub fn scaled(&self, factor: f64) -> MCEstimate {
        MCEstimate { mean: self.mean * factor, stderr: self.stderr * factor.abs(), ..self.clone() }
    }
}

/// Standard normal variates by Box–Muller; every pair of normals consumes
/// exactly two 64-bit words.
pub struct NormalStream<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> NormalStream<R> {
    pub fn new(rng: R) -> Self {
        NormalStream { rng, spare: None }
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn rng(&mut self) -> &mut R {
        &mut self.rng
    }
}

pub type SampleStream = NormalStream<ChaCha8Rng>;

/// Stream factory for one seed.
#[derive(Clone)]
pub struct StreamFamily {
    base: ChaCha8Rng,
}

impl StreamFamily {
    pub fn new(seed: u64) -> Self {
        StreamFamily { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn stream(&self, index: u64) -> SampleStream {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        NormalStream::new(rng)
    }
}

/// Derives an independent seed for a labelled sub-computation.
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    crate::shape::mix64(parent ^ crate::shape::mix64(label.wrapping_add(0x5bd1_e995)))
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64 / count as f64);
        Moments { count, mean, m2 }
    }
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Evaluates `f` on every sample index and returns the results in index order.
/// `workers == 0` uses the global thread pool.
pub fn map_samples<T, F>(samples: u64, seed: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut SampleStream) -> T + Sync,
{
    let family = StreamFamily::new(seed);
    with_workers(workers, || {
        let chunks: Vec<Vec<T>> = (0..samples.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(samples)).map(|i| f(i, &mut family.stream(i))).collect())
            .collect();
        chunks.into_iter().flatten().collect()
    })
}

/// Monte Carlo mean of `f` over `samples` independent streams.
pub fn estimate<F>(samples: u64, seed: u64, workers: usize, f: F) -> MCEstimate
where
    F: Fn(u64, &mut SampleStream) -> f64 + Sync,
{
    assert!(samples >= 2, "Monte Carlo needs at least two samples");
    let start = Instant::now();
    let family = StreamFamily::new(seed);
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Moments> = with_workers(workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut m = Moments::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                    m.push(f(i, &mut family.stream(i)));
                }
                m
            })
            .collect()
    });
    let total = partials.into_iter().fold(Moments::default(), Moments::merge);
    summarize(&total, seed, start)
}

/// Estimate from already computed per-sample values.
pub fn estimate_from_values(values: &[f64], seed: u64) -> MCEstimate {
    assert!(values.len() >= 2, "Monte Carlo needs at least two samples");
    let start = Instant::now();
    let total = values
        .chunks(CHUNK as usize)
        .map(|c| {
            let mut m = Moments::default();
            c.iter().for_each(|&x| m.push(x));
            m
        })
        .fold(Moments::default(), Moments::merge);
    summarize(&total, seed, start)
}

fn summarize(m: &Moments, seed: u64, start: Instant) -> MCEstimate {
    let var = if m.count > 1 { m.m2 / (m.count - 1) as f64 } else { 0.0 };
    MCEstimate {
        mean: m.mean,
        stderr: (var.max(0.0) / m.count as f64).sqrt(),
        samples: m.count,
        seed,
        elapsed: start.elapsed().as_secs_f64(),
    }
}
