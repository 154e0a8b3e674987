//! Γ at integer and half-integer arguments, kept exact as a rational multiple
//! of a power of `√π`.

use std::fmt;
use std::ops::{Div, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SpecialFnError {
    #[error("Γ({0}/2) overflows f64; use the log-domain value")]
    Overflow(u32),
}

/// A positive half-integer `m/2`, stored as `m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInteger(u32);

impl HalfInteger {
    pub fn new(twice_value: u32) -> Option<Self> {
        (twice_value >= 1).then_some(HalfInteger(twice_value))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// `coeff * π^(sqrt_pi_power / 2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiRational {
    pub coeff: BigRational,
    pub sqrt_pi_power: i32,
}

impl PiRational {
    pub fn one() -> Self {
        PiRational { coeff: BigRational::one(), sqrt_pi_power: 0 }
    }

    pub fn from_integer(v: i64) -> Self {
        PiRational { coeff: BigRational::from_integer(BigInt::from(v)), sqrt_pi_power: 0 }
    }

    pub fn rational(num: i64, den: i64) -> Self {
        PiRational { coeff: BigRational::new(num.into(), den.into()), sqrt_pi_power: 0 }
    }

    pub fn sqrt_pi_pow(p: i32) -> Self {
        PiRational { coeff: BigRational::one(), sqrt_pi_power: p }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn powi(&self, e: u32) -> Self {
        (0..e).fold(PiRational::one(), |acc, _| acc * self.clone())
    }

    pub fn to_f64(&self) -> f64 {
        if self.coeff.is_zero() {
            return 0.0;
        }
        let c = ratio_to_f64(&self.coeff);
        let pi_part = std::f64::consts::PI.powf(self.sqrt_pi_power as f64 / 2.0);
        let direct = c * pi_part;
        if direct.is_finite() && direct != 0.0 && c.is_finite() && c != 0.0 {
            direct
        } else {
            self.ln().exp()
        }
    }

    /// Natural logarithm of the absolute value.
    pub fn ln(&self) -> f64 {
        ratio_ln(&self.coeff) + 0.5 * self.sqrt_pi_power as f64 * std::f64::consts::PI.ln()
    }
}

impl Mul for PiRational {
    type Output = PiRational;

    fn mul(self, rhs: PiRational) -> PiRational {
        PiRational { coeff: self.coeff * rhs.coeff, sqrt_pi_power: self.sqrt_pi_power + rhs.sqrt_pi_power }
    }
}

impl Div for PiRational {
    type Output = PiRational;

    fn div(self, rhs: PiRational) -> PiRational {
        PiRational { coeff: self.coeff / rhs.coeff, sqrt_pi_power: self.sqrt_pi_power - rhs.sqrt_pi_power }
    }
}

impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        match self.sqrt_pi_power {
            0 => Ok(()),
            p if p % 2 == 0 => write!(f, "·π^{}", p / 2),
            p => write!(f, "·π^({}/2)", p),
        }
    }
}

impl Serialize for PiRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let l = ratio_ln(r).exp();
        if r.is_negative() {
            -l
        } else {
            l
        }
    })
}

fn bigint_ln(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (v.abs() >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ratio_ln(r: &BigRational) -> f64 {
    bigint_ln(r.numer()) - bigint_ln(r.denom())
}

/// Γ(m/2) exactly: `(m/2 - 1)!` for even `m`, and
/// `√π · (1/2)(3/2)..((m-2)/2)` for odd `m`.
pub fn gamma_half_exact(x: HalfInteger) -> PiRational {
    let m = x.twice();
    if m.is_multiple_of(2) {
        let fact: BigInt = (1..m / 2).map(BigInt::from).product();
        PiRational { coeff: BigRational::from_integer(fact), sqrt_pi_power: 0 }
    } else {
        // ∏_{t=1}^{(m-1)/2} (2t - 1) / 2
        let steps = (m - 1) / 2;
        let num: BigInt = (1..=steps).map(|t| BigInt::from(2 * t - 1)).product();
        let den = BigInt::one() << steps;
        PiRational { coeff: BigRational::new(num, den), sqrt_pi_power: 1 }
    }
}

/// `ln Γ(m/2)`, summed factor by factor along the recurrence.
pub fn ln_gamma_half(x: HalfInteger) -> f64 {
    let m = x.twice();
    if m.is_multiple_of(2) {
        (2..m / 2).map(|t| (t as f64).ln()).sum()
    } else {
        let steps = (m - 1) / 2;
        0.5 * std::f64::consts::PI.ln() + (1..=steps).map(|t| (t as f64 - 0.5).ln()).sum::<f64>()
    }
}

/// Γ(m/2) as a float; errors when the value exceeds `f64::MAX`.
pub fn gamma_half(x: HalfInteger) -> Result<f64, SpecialFnError> {
    let ln = ln_gamma_half(x);
    if ln > f64::MAX.ln() {
        return Err(SpecialFnError::Overflow(x.twice()));
    }
    Ok(gamma_half_exact(x).to_f64())
}

fn half(m: u32) -> HalfInteger {
    HalfInteger::new(m).expect("half-integer argument must be positive")
}

/// Surface volume of the unit sphere `S^{m-1}` in `R^m`: `2 Γ(1/2)^m / Γ(m/2)`.
pub fn sphere_volume_exact(m: u32) -> PiRational {
    assert!(m >= 1);
    PiRational::from_integer(2) * PiRational::sqrt_pi_pow(m as i32) / gamma_half_exact(half(m))
}

pub fn sphere_volume(m: u32) -> f64 {
    sphere_volume_exact(m).to_f64()
}

/// `Γ((m+1)/2) / Γ(m/2)`, exact.
pub fn gamma_step_ratio(m: u32) -> PiRational {
    gamma_half_exact(half(m + 1)) / gamma_half_exact(half(m))
}

/// Mean Euclidean norm of a standard Gaussian vector in `R^m`:
/// `√2 Γ((m+1)/2) / Γ(m/2)`.
pub fn chi_mean(m: u32) -> f64 {
    assert!(m >= 1);
    if m > 300 {
        let ln = 0.5 * std::f64::consts::LN_2 + ln_gamma_half(half(m + 1)) - ln_gamma_half(half(m));
        return ln.exp();
    }
    std::f64::consts::SQRT_2 * gamma_step_ratio(m).to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::rel_close;

    mod approx_eq {
        pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * b.abs().max(1e-300)
        }
    }

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn gamma_examples() {
        assert!(rel_close(gamma_half(half(1)).unwrap(), SQRT_PI, 1e-15));
        assert_eq!(gamma_half(half(2)).unwrap(), 1.0);
        assert!(rel_close(gamma_half(half(7)).unwrap(), 15.0 * SQRT_PI / 8.0, 1e-15));
        assert_eq!(gamma_half_exact(half(7)).coeff, BigRational::new(15.into(), 8.into()));
        assert_eq!(gamma_half(half(12)).unwrap(), 120.0);
    }

    #[test]
    fn recurrence_holds_exactly() {
        for m in 1..=200u32 {
            let x = m as i64;
            let lhs = gamma_half_exact(half(m + 2));
            let rhs = PiRational::rational(x, 2) * gamma_half_exact(half(m));
            assert_eq!(lhs, rhs, "m = {m}");
        }
    }

    #[test]
    fn log_domain_matches_exact() {
        for m in 1..=400u32 {
            let exact = gamma_half_exact(half(m)).ln();
            let summed = ln_gamma_half(half(m));
            let scale = exact.abs().max(1.0);
            assert!((exact - summed).abs() <= 1e-14 * scale, "m = {m}: {exact} vs {summed}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(gamma_half(half(340)).is_ok()); // Γ(170) ≈ 4.3e304
        assert_eq!(gamma_half(half(400)), Err(SpecialFnError::Overflow(400)));
        assert!(ln_gamma_half(half(400)).is_finite());
    }

    #[test]
    fn sphere_volume_examples() {
        assert!(rel_close(sphere_volume(1), 2.0, 1e-15));
        assert!(rel_close(sphere_volume(2), 2.0 * std::f64::consts::PI, 1e-15));
        assert!(rel_close(sphere_volume(3), 4.0 * std::f64::consts::PI, 1e-15));
    }

    #[test]
    fn chi_mean_examples() {
        let pi = std::f64::consts::PI;
        assert!(rel_close(chi_mean(1), (2.0 / pi).sqrt(), 1e-15));
        assert!(rel_close(chi_mean(2), (pi / 2.0).sqrt(), 1e-15));
        assert!(rel_close(chi_mean(3), 2.0 * (2.0 / pi).sqrt(), 1e-15));
    }

    #[test]
    fn chi_mean_below_sqrt_and_ratio_increasing() {
        let mut prev = 0.0;
        for m in 1..=100u32 {
            let r = chi_mean(m) / (m as f64).sqrt();
            assert!(r < 1.0);
            assert!(r > prev, "m = {m}");
            prev = r;
        }
        assert!(1.0 - chi_mean(100_000) / (100_000f64).sqrt() < 1e-5);
    }

    #[test]
    fn half_integer_rejects_zero() {
        assert!(HalfInteger::new(0).is_none());
        assert_eq!(HalfInteger::new(5).unwrap().value(), 2.5);
    }
}
