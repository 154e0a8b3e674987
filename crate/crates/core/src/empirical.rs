//! Ground-truth simulation: draw random systems from the invariant ensemble
//! and count their real projective roots.
//!
//! Counting is exact for one binary form (`n = (1)`), for diagonal products
//! of binary forms (every equation lives in its own one-variable block), and
//! for two bilinear equations on `P¹ × P¹`.

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::montecarlo::{self, MCEstimate, SampleStream};
use crate::shape::{ExponentVector, ShapeError, ShapeSpec};

/// Relative imaginary-part tolerance for calling an eigenvalue real.
pub const DEFAULT_TAU: f64 = 1e-8;
/// Leading coefficients below this fraction of the largest are treated as zero.
pub const INFINITY_THRESHOLD: f64 = 1e-12;
/// Coefficients below this magnitude make the bilinear elimination degenerate.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmpiricalError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("bilinear elimination quadratic vanishes identically")]
    DegenerateSystem,
    #[error("root counting is not available for this shape: {0}")]
    UnsupportedFamily(String),
}

/// Coefficient law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Variance `η(a)^{-1}`, the orthogonally invariant ensemble.
    Kostlan,
    /// Variance 1 for every monomial.
    Unit,
}

/// One random system: per equation, its monomials and coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSample {
    pub shape: ShapeSpec,
    pub coefficients: Vec<Vec<(ExponentVector, f64)>>,
    pub root_count: Option<u32>,
}

/// Precomputed supports and standard deviations for repeated sampling.
#[derive(Debug, Clone)]
pub struct SystemSampler {
    shape: ShapeSpec,
    supports: Vec<Vec<(ExponentVector, f64)>>,
}

impl SystemSampler {
    pub fn new(shape: &ShapeSpec, ensemble: Ensemble) -> Result<Self, ShapeError> {
        let supports = (0..shape.n())
            .map(|i| {
                let support = shape.enumerate_support(i)?;
                Ok(support
                    .into_iter()
                    .map(|a| {
                        let sd = match ensemble {
                            Ensemble::Kostlan => a.kostlan_variance().sqrt(),
                            Ensemble::Unit => 1.0,
                        };
                        (a, sd)
                    })
                    .collect())
            })
            .collect::<Result<_, ShapeError>>()?;
        Ok(SystemSampler { shape: shape.clone(), supports })
    }

    /// Raw coefficients in support order, one vector per equation.
    pub fn draw_coefficients(&self, stream: &mut SampleStream) -> Vec<Vec<f64>> {
        self.supports.iter().map(|sup| sup.iter().map(|(_, sd)| sd * stream.normal()).collect()).collect()
    }

    pub fn draw(&self, stream: &mut SampleStream) -> SystemSample {
        let coefficients = self
            .draw_coefficients(stream)
            .into_iter()
            .zip(&self.supports)
            .map(|(c, sup)| sup.iter().map(|(a, _)| a.clone()).zip(c).collect())
            .collect();
        SystemSample { shape: self.shape.clone(), coefficients, root_count: None }
    }
}

/// Draws one system from the invariant ensemble.
pub fn sample_system(spec: &ShapeSpec, stream: &mut SampleStream) -> Result<SystemSample, ShapeError> {
    Ok(SystemSampler::new(spec, Ensemble::Kostlan)?.draw(stream))
}

/// `f_i(ζ) = Σ_a f_ia ζ^a` for per-block coordinates `point[j]` of length `n_j + 1`.
pub fn evaluate(sample: &SystemSample, point: &[Vec<f64>]) -> Vec<f64> {
    sample.coefficients.iter().map(|eq| eq.iter().map(|(a, c)| c * a.monomial(point)).sum()).collect()
}

/// Outcome of counting one system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CountFlags {
    /// A root at infinity was added by the leading-coefficient rule.
    pub infinity: bool,
    /// Two counted roots (or a boundary discriminant) nearly coincide.
    pub near_multiple: bool,
    /// The counter reported a degenerate input; the count is recorded as 0.
    pub degenerate: bool,
}

impl CountFlags {
    pub fn any(&self) -> bool {
        self.infinity || self.near_multiple || self.degenerate
    }

    fn merge(self, other: CountFlags) -> CountFlags {
        CountFlags {
            infinity: self.infinity || other.infinity,
            near_multiple: self.near_multiple || other.near_multiple,
            degenerate: self.degenerate || other.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCount {
    pub count: u32,
    pub flags: CountFlags,
    /// Angles `θ ∈ [0, π)` of the real roots `[cos θ : sin θ]` in `P¹`
    /// (univariate counter only).
    pub angles: Vec<f64>,
}

/// Real roots in `P¹` of the binary form `Σ_t c_t y_0^{d-t} y_1^t`, with
/// `c_t` listed for `t = 0..=d` (the support order of a one-variable block).
///
/// Dehomogenizes at `y_0 = 1` and takes eigenvalues of the companion matrix.
/// Leading coefficients below `INFINITY_THRESHOLD · max|c|` are roots at
/// `[0 : 1]`, counted with multiplicity and flagged.
pub fn count_real_roots_univariate(coeffs: &[f64], tau: f64) -> Result<RootCount, EmpiricalError> {
    let d = coeffs.len().saturating_sub(1);
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(EmpiricalError::ZeroPolynomial);
    }
    let degree = (0..=d).rev().find(|&t| coeffs[t].abs() >= INFINITY_THRESHOLD * scale).unwrap_or(0);
    let at_infinity = (d - degree) as u32;
    let mut flags = CountFlags { infinity: at_infinity > 0, ..Default::default() };
    let mut angles = vec![std::f64::consts::FRAC_PI_2; at_infinity as usize];
    let mut real_roots = Vec::new();
    if degree > 0 {
        let lead = coeffs[degree];
        let companion = DMatrix::from_fn(degree, degree, |r, c| {
            if r == 0 {
                -coeffs[degree - 1 - c] / lead
            } else if r == c + 1 {
                1.0
            } else {
                0.0
            }
        });
        for z in companion.complex_eigenvalues().iter() {
            if z.im.abs() <= tau * (1.0 + z.norm()) {
                real_roots.push(z.re);
            }
        }
    }
    real_roots.sort_by(f64::total_cmp);
    for w in real_roots.windows(2) {
        if (w[1] - w[0]).abs() <= tau.sqrt() * (1.0 + w[0].abs()) {
            flags.near_multiple = true;
        }
    }
    angles.extend(real_roots.iter().map(|&t| t.atan().rem_euclid(std::f64::consts::PI)));
    Ok(RootCount { count: at_infinity + real_roots.len() as u32, flags, angles })
}

/// Coefficient `M[p][q]` of `y1_p y2_q` in a bilinear equation.
pub type Bilinear = [[f64; 2]; 2];

fn binary_quadratic_count(a: f64, b: f64, c: f64, tau: f64) -> Result<RootCount, EmpiricalError> {
    if a.abs().max(b.abs()).max(c.abs()) < DEGENERATE_THRESHOLD {
        return Err(EmpiricalError::DegenerateSystem);
    }
    let disc = b * b - 4.0 * a * c;
    let scale = b * b + (4.0 * a * c).abs();
    if disc.abs() <= tau * scale {
        let flags = CountFlags { near_multiple: true, ..Default::default() };
        return Ok(RootCount { count: 1, flags, angles: vec![] });
    }
    let count = if disc > 0.0 { 2 } else { 0 };
    Ok(RootCount { count, flags: CountFlags::default(), angles: vec![] })
}

/// Roots in `P¹ × P¹` of `y1ᵀ M_1 y2 = y1ᵀ M_2 y2 = 0`. A root needs
/// `M_1ᵀ y1` and `M_2ᵀ y1` to be parallel, a binary quadratic in `y1`;
/// each real root completes to one `y2`.
pub fn count_real_roots_bilinear(m1: &Bilinear, m2: &Bilinear, tau: f64) -> Result<RootCount, EmpiricalError> {
    let c = |p: usize, r: usize| m1[p][0] * m2[r][1] - m1[p][1] * m2[r][0];
    binary_quadratic_count(c(0, 0), c(0, 1) + c(1, 0), c(1, 1), tau)
}

/// Same count, eliminating `y1` instead (`M_1 y2` parallel to `M_2 y2`).
pub fn count_real_roots_bilinear_dual(m1: &Bilinear, m2: &Bilinear, tau: f64) -> Result<RootCount, EmpiricalError> {
    let c = |q: usize, s: usize| m1[0][q] * m2[1][s] - m1[1][q] * m2[0][s];
    binary_quadratic_count(c(0, 0), c(0, 1) + c(1, 0), c(1, 1), tau)
}

/// Reads `M[p][q]` from bilinear coefficients in support order.
fn bilinear_matrix(support: &[(ExponentVector, f64)], coeffs: &[f64]) -> Bilinear {
    let mut m = [[0.0; 2]; 2];
    for ((a, _), &c) in support.iter().zip(coeffs) {
        let p = a.blocks[0].iter().position(|&x| x == 1).expect("degree one in block 1");
        let q = a.blocks[1].iter().position(|&x| x == 1).expect("degree one in block 2");
        m[p][q] = c;
    }
    m
}

/// Shapes whose real roots can be counted exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Every equation lives in its own one-variable block; `blocks[i]` is
    /// the block of equation `i`. One binary form is the case `n = 1`.
    Diagonal { blocks: Vec<usize> },
    /// `n = (1, 1)`, `δ = [[1, 1], [1, 1]]`.
    Bilinear,
}

pub fn classify(spec: &ShapeSpec) -> Result<Family, EmpiricalError> {
    if spec.block_sizes().contains(&0) {
        return Err(EmpiricalError::UnsupportedFamily("blocks of size zero".into()));
    }
    if spec.block_sizes() == [1, 1] && (0..2).all(|i| spec.row(i) == [1, 1]) {
        return Ok(Family::Bilinear);
    }
    if spec.block_sizes().iter().all(|&s| s == 1) {
        let mut blocks = Vec::with_capacity(spec.n());
        let mut used = vec![false; spec.k()];
        for i in 0..spec.n() {
            let nonzero: Vec<usize> = (0..spec.k()).filter(|&j| spec.degree(i, j) > 0).collect();
            let j = match nonzero.as_slice() {
                [j] => *j,
                // a constant equation: take the first free block
                [] => match used.iter().position(|&u| !u) {
                    Some(j) if (0..spec.n()).all(|r| r == i || spec.degree(r, j) == 0) => j,
                    _ => return Err(EmpiricalError::UnsupportedFamily("not a diagonal product".into())),
                },
                _ => return Err(EmpiricalError::UnsupportedFamily("equation couples several blocks".into())),
            };
            if used[j] {
                return Err(EmpiricalError::UnsupportedFamily("two equations share a block".into()));
            }
            used[j] = true;
            blocks.push(j);
        }
        return Ok(Family::Diagonal { blocks });
    }
    Err(EmpiricalError::UnsupportedFamily(
        "only diagonal products of binary forms and the bilinear pair are supported".into(),
    ))
}

/// Binary-form coefficients of equation `i` when it lives in block `j`
/// alone: `c_t` multiplies `y_{j0}^{d-t} y_{j1}^t`.
fn binary_form(support: &[(ExponentVector, f64)], coeffs: &[f64], j: usize) -> Vec<f64> {
    let d = support.first().map(|(a, _)| a.block_degree(j)).unwrap_or(0) as usize;
    let mut out = vec![0.0; d + 1];
    for ((a, _), &c) in support.iter().zip(coeffs) {
        out[a.blocks[j][1] as usize] += c;
    }
    out
}

/// Counts one drawn system of a supported family.
pub fn count_system(sampler: &SystemSampler, family: &Family, coeffs: &[Vec<f64>], tau: f64) -> RootCount {
    let degenerate = || RootCount { count: 0, flags: CountFlags { degenerate: true, ..Default::default() }, angles: vec![] };
    match family {
        Family::Bilinear => {
            let m1 = bilinear_matrix(&sampler.supports[0], &coeffs[0]);
            let m2 = bilinear_matrix(&sampler.supports[1], &coeffs[1]);
            count_real_roots_bilinear(&m1, &m2, tau).unwrap_or_else(|_| degenerate())
        }
        Family::Diagonal { blocks } => {
            let mut total = RootCount { count: 1, flags: CountFlags::default(), angles: vec![] };
            for (i, &j) in blocks.iter().enumerate() {
                let form = binary_form(&sampler.supports[i], &coeffs[i], j);
                match count_real_roots_univariate(&form, tau) {
                    Ok(rc) => {
                        total.count *= rc.count;
                        total.flags = total.flags.merge(rc.flags);
                        if blocks.len() == 1 {
                            total.angles = rc.angles;
                        }
                    }
                    Err(_) => return degenerate(),
                }
            }
            total
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub samples: u64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    pub tau: f64,
    pub ensemble: Ensemble,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { samples: 100_000, seed: 0, workers: 0, tau: DEFAULT_TAU, ensemble: Ensemble::Kostlan }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub index: u64,
    pub count: u32,
    pub flags: CountFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub family: Family,
    pub estimate: MCEstimate,
    pub flagged: u64,
    #[serde(skip)]
    pub outcomes: Vec<SampleOutcome>,
    #[serde(skip)]
    pub angles: Vec<f64>,
}

/// Draws `samples` systems and counts their real roots.
pub fn simulate(spec: &ShapeSpec, cfg: &SimulationConfig) -> Result<Simulation, EmpiricalError> {
    let family = classify(spec)?;
    let sampler = SystemSampler::new(spec, cfg.ensemble)?;
    let counts = montecarlo::map_samples(cfg.samples, cfg.seed, cfg.workers, |_, stream| {
        let coeffs = sampler.draw_coefficients(stream);
        count_system(&sampler, &family, &coeffs, cfg.tau)
    });
    let values: Vec<f64> = counts.iter().map(|c| c.count as f64).collect();
    let estimate = montecarlo::estimate_from_values(&values, cfg.seed);
    let flagged = counts.iter().filter(|c| c.flags.any()).count() as u64;
    let angles = counts.iter().flat_map(|c| c.angles.iter().copied()).collect();
    let outcomes = counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| SampleOutcome { index: i as u64, count: c.count, flags: c.flags })
        .collect();
    Ok(Simulation { family, estimate, flagged, outcomes, angles })
}

/// Monte Carlo mean of the real root count.
pub fn empirical_expectation(spec: &ShapeSpec, cfg: &SimulationConfig) -> Result<MCEstimate, EmpiricalError> {
    simulate(spec, cfg).map(|s| s.estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub statistic: f64,
    pub dof: u32,
    /// 99.9% quantile of the chi-square distribution with `dof` degrees.
    pub critical: f64,
    pub roots: u64,
    pub counts: Vec<u64>,
    pub uniform: bool,
}

/// Chi-square test of the root angles `θ ∈ [0, π)` against the uniform law.
pub fn uniformity_check(spec: &ShapeSpec, cfg: &SimulationConfig, bins: usize) -> Result<UniformityReport, EmpiricalError> {
    if spec.n() != 1 || spec.k() != 1 {
        return Err(EmpiricalError::UnsupportedFamily("uniformity needs a single binary form".into()));
    }
    assert!(bins >= 2);
    let sim = simulate(spec, cfg)?;
    let mut counts = vec![0u64; bins];
    for &theta in &sim.angles {
        let b = ((theta / std::f64::consts::PI) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let roots = sim.angles.len() as u64;
    let expected = roots as f64 / bins as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = (bins - 1) as u32;
    let critical = ChiSquared::new(dof as f64).expect("positive dof").inverse_cdf(0.999);
    Ok(UniformityReport { statistic, dof, critical, roots, counts, uniform: statistic < critical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::StreamFamily;
    use std::f64::consts::PI;

    fn shape(bs: &[usize], rows: &[&[u32]]) -> ShapeSpec {
        ShapeSpec::new(bs.to_vec(), rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn sim(samples: u64, seed: u64) -> SimulationConfig {
        SimulationConfig { samples, seed, ..Default::default() }
    }

    #[test]
    fn kostlan_variances() {
        let quad = SystemSampler::new(&shape(&[1], &[&[2]]), Ensemble::Kostlan).unwrap();
        let vars: Vec<f64> = quad.supports[0].iter().map(|(a, _)| a.kostlan_variance()).collect();
        assert_eq!(vars, vec![1.0, 2.0, 1.0]);
        assert!(quad.supports[0].iter().all(|(a, s)| (s * s - a.kostlan_variance()).abs() < 1e-15));
        let bil = SystemSampler::new(&shape(&[1, 1], &[&[1, 1], &[1, 1]]), Ensemble::Kostlan).unwrap();
        assert!(bil.supports.iter().flatten().all(|(_, s)| *s == 1.0));
        assert_eq!(bil.supports[0].len(), 4);
        let constant = SystemSampler::new(&shape(&[1], &[&[0]]), Ensemble::Kostlan).unwrap();
        assert_eq!(constant.supports[0].len(), 1);
        assert_eq!(constant.supports[0][0].1, 1.0);
    }

    #[test]
    fn coefficient_variances_in_aggregate() {
        let spec = shape(&[1], &[&[4]]);
        let sampler = SystemSampler::new(&spec, Ensemble::Kostlan).unwrap();
        let draws = montecarlo::map_samples(100_000, 8, 0, |_, s| sampler.draw_coefficients(s));
        for (t, want) in [1.0, 4.0, 6.0, 4.0, 1.0].into_iter().enumerate() {
            let var = draws.iter().map(|c| c[0][t].powi(2)).sum::<f64>() / draws.len() as f64;
            assert!((var / want - 1.0).abs() < 0.05, "t = {t}: {var}");
        }
    }

    #[test]
    fn evaluation_examples_and_unit_variance() {
        let spec = shape(&[1], &[&[2]]);
        let mut s = sample_system(&spec, &mut StreamFamily::new(0).stream(0)).unwrap();
        for (_, c) in s.coefficients[0].iter_mut() {
            *c = 0.0;
        }
        assert_eq!(evaluate(&s, &[vec![0.3, 0.7]]), vec![0.0]);
        // x² - y²
        s.coefficients[0][0].1 = 1.0;
        s.coefficients[0][2].1 = -1.0;
        assert_eq!(evaluate(&s, &[vec![1.0, 1.0]]), vec![0.0]);

        let spec = shape(&[2, 1], &[&[2, 1], &[1, 3], &[0, 2]]);
        let sampler = SystemSampler::new(&spec, Ensemble::Kostlan).unwrap();
        let point = vec![vec![0.6, 0.0, 0.8], vec![(0.5f64).sqrt(), -(0.5f64).sqrt()]];
        let values = montecarlo::map_samples(100_000, 3, 0, |_, st| evaluate(&sampler.draw(st), &point));
        for i in 0..3 {
            let var = values.iter().map(|v| v[i].powi(2)).sum::<f64>() / values.len() as f64;
            assert!((var - 1.0).abs() < 0.05, "row {i}: {var}");
        }
    }

    #[test]
    fn univariate_examples() {
        assert_eq!(count_real_roots_univariate(&[1.0, 0.0, 1.0], DEFAULT_TAU).unwrap().count, 0);
        let two = count_real_roots_univariate(&[1.0, 0.0, -1.0], DEFAULT_TAU).unwrap();
        assert_eq!(two.count, 2);
        let mut angles = two.angles.clone();
        angles.sort_by(f64::total_cmp);
        assert!((angles[0] - PI / 4.0).abs() < 1e-12 && (angles[1] - 3.0 * PI / 4.0).abs() < 1e-12);
        // y0·y1: roots [1:0] and [0:1]
        let inf = count_real_roots_univariate(&[0.0, 1.0, 0.0], DEFAULT_TAU).unwrap();
        assert_eq!(inf.count, 2);
        assert!(inf.flags.infinity);
        assert_eq!(count_real_roots_univariate(&[0.0, 0.0], DEFAULT_TAU), Err(EmpiricalError::ZeroPolynomial));
        // (y1 - y0)² is a double root
        let dbl = count_real_roots_univariate(&[1.0, -2.0, 1.0], DEFAULT_TAU).unwrap();
        assert!(dbl.flags.near_multiple || dbl.count == 0);
    }

    #[test]
    fn bilinear_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let flip = [[1.0, 0.0], [0.0, -1.0]];
        let rot = [[0.0, -1.0], [1.0, 0.0]];
        assert_eq!(count_real_roots_bilinear(&id, &flip, DEFAULT_TAU).unwrap().count, 2);
        assert_eq!(count_real_roots_bilinear(&id, &rot, DEFAULT_TAU).unwrap().count, 0);
        assert_eq!(
            count_real_roots_bilinear(&id, &id, DEFAULT_TAU),
            Err(EmpiricalError::DegenerateSystem)
        );
    }

    #[test]
    fn linear_forms_have_exactly_one_root() {
        let s = simulate(&shape(&[1], &[&[1]]), &sim(10_000, 1)).unwrap();
        assert_eq!((s.estimate.mean, s.estimate.stderr), (1.0, 0.0));
    }

    #[test]
    fn quartic_mean_is_two() {
        let est = empirical_expectation(&shape(&[1], &[&[4]]), &sim(100_000, 2)).unwrap();
        assert!(est.agrees_with(2.0, 4.0), "{} ± {}", est.mean, est.stderr);
    }

    #[test]
    fn bilinear_mean_and_dual_elimination() {
        let spec = shape(&[1, 1], &[&[1, 1], &[1, 1]]);
        let s = simulate(&spec, &sim(100_000, 3)).unwrap();
        assert!(s.estimate.agrees_with(PI / 2.0, 4.0));
        let boundary = s.outcomes.iter().filter(|o| o.count % 2 == 1).count();
        assert!((boundary as f64) < 1e-3 * s.outcomes.len() as f64);

        let sampler = SystemSampler::new(&spec, Ensemble::Kostlan).unwrap();
        let fam = StreamFamily::new(4);
        for i in 0..10_000 {
            let c = sampler.draw_coefficients(&mut fam.stream(i));
            let m1 = bilinear_matrix(&sampler.supports[0], &c[0]);
            let m2 = bilinear_matrix(&sampler.supports[1], &c[1]);
            let a = count_real_roots_bilinear(&m1, &m2, DEFAULT_TAU).unwrap().count;
            let b = count_real_roots_bilinear_dual(&m1, &m2, DEFAULT_TAU).unwrap().count;
            assert_eq!(a, b, "sample {i}");
        }
    }

    #[test]
    fn product_shape_matches_product_of_blocks() {
        let prod = shape(&[1, 1], &[&[0, 3], &[2, 0]]);
        let whole = empirical_expectation(&prod, &sim(100_000, 5)).unwrap();
        let a = empirical_expectation(&shape(&[1], &[&[3]]), &sim(100_000, 6)).unwrap();
        let b = empirical_expectation(&shape(&[1], &[&[2]]), &sim(100_000, 7)).unwrap();
        let predicted = a.mean * b.mean;
        let se = ((b.mean * a.stderr).powi(2) + (a.mean * b.stderr).powi(2) + whole.stderr.powi(2)).sqrt();
        assert!((whole.mean - predicted).abs() <= 4.0 * se);
        assert!(whole.agrees_with(6f64.sqrt(), 4.0));
    }

    #[test]
    fn unsupported_shapes_are_rejected() {
        for s in [shape(&[2], &[&[1], &[1]]), shape(&[1, 0], &[&[1, 1]]), shape(&[1, 1], &[&[1, 2], &[1, 1]])] {
            assert!(matches!(classify(&s), Err(EmpiricalError::UnsupportedFamily(_))), "{s}");
        }
    }

    #[test]
    fn tolerance_does_not_change_mean() {
        let spec = shape(&[1], &[&[6]]);
        let base = empirical_expectation(&spec, &sim(50_000, 9)).unwrap();
        for tau in [DEFAULT_TAU / 10.0, DEFAULT_TAU * 10.0] {
            let other = empirical_expectation(&spec, &SimulationConfig { tau, ..sim(50_000, 9) }).unwrap();
            assert!((other.mean - base.mean).abs() <= base.stderr);
        }
    }

    /// Coefficients of `f(R y)` for the rotation `R` by angle `phi`.
    fn rotate_form(coeffs: &[f64], phi: f64) -> Vec<f64> {
        let d = coeffs.len() - 1;
        let (s, c) = phi.sin_cos();
        let mul = |p: &[f64], q: &[f64]| {
            let mut out = vec![0.0; p.len() + q.len() - 1];
            for (i, a) in p.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            out
        };
        // y0 -> c y0 - s y1, y1 -> s y0 + c y1, as forms indexed by the power of y1
        let mut out = vec![0.0; d + 1];
        for (t, &ct) in coeffs.iter().enumerate() {
            let mut term = vec![ct];
            for _ in 0..d - t {
                term = mul(&term, &[c, -s]);
            }
            for _ in 0..t {
                term = mul(&term, &[s, c]);
            }
            out.iter_mut().zip(&term).for_each(|(o, x)| *o += x);
        }
        out
    }

    #[test]
    fn counts_are_rotation_invariant() {
        let spec = shape(&[1], &[&[5]]);
        let sampler = SystemSampler::new(&spec, Ensemble::Kostlan).unwrap();
        let fam = StreamFamily::new(10);
        for i in 0..2000 {
            let mut st = fam.stream(i);
            let c = sampler.draw_coefficients(&mut st);
            let phi = st.uniform() * PI;
            let a = count_real_roots_univariate(&c[0], DEFAULT_TAU).unwrap().count;
            let b = count_real_roots_univariate(&rotate_form(&c[0], phi), DEFAULT_TAU).unwrap().count;
            assert_eq!(a, b, "sample {i}");
        }
        let bil = shape(&[1, 1], &[&[1, 1], &[1, 1]]);
        let sampler = SystemSampler::new(&bil, Ensemble::Kostlan).unwrap();
        let rot = |phi: f64| {
            let (s, c) = phi.sin_cos();
            [[c, -s], [s, c]]
        };
        let conj = |m: &Bilinear, r1: &Bilinear, r2: &Bilinear| {
            let mut out = [[0.0; 2]; 2];
            for p in 0..2 {
                for q in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            out[p][q] += r1[a][p] * m[a][b] * r2[b][q];
                        }
                    }
                }
            }
            out
        };
        for i in 0..2000 {
            let mut st = fam.stream(i);
            let c = sampler.draw_coefficients(&mut st);
            let (r1, r2) = (rot(st.uniform() * PI), rot(st.uniform() * PI));
            let m1 = bilinear_matrix(&sampler.supports[0], &c[0]);
            let m2 = bilinear_matrix(&sampler.supports[1], &c[1]);
            let a = count_real_roots_bilinear(&m1, &m2, DEFAULT_TAU).unwrap().count;
            let b = count_real_roots_bilinear(&conj(&m1, &r1, &r2), &conj(&m2, &r1, &r2), DEFAULT_TAU)
                .unwrap()
                .count;
            assert_eq!(a, b, "sample {i}");
        }
    }

    #[test]
    fn uniformity_holds_for_kostlan_and_fails_for_unit_weights() {
        for d in [1, 4] {
            let r = uniformity_check(&shape(&[1], &[&[d]]), &sim(100_000, 11), 10).unwrap();
            assert!(r.uniform, "d = {d}: {} vs {}", r.statistic, r.critical);
            assert_eq!(r.dof, 9);
        }
        let unit = SimulationConfig { ensemble: Ensemble::Unit, ..sim(100_000, 12) };
        let r = uniformity_check(&shape(&[1], &[&[4]]), &unit, 10).unwrap();
        assert!(!r.uniform, "{}", r.statistic);
        assert!((r.critical - 27.877).abs() < 1e-2);
    }
}
