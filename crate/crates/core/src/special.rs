//! Digamma, trigamma and unit-ball volumes.

use crate::error::{Error, Result};
use crate::scalar::Real;

const ASYMPTOTIC_FROM: f64 = 10.0;

/// ψ(x) for x > 0, by upward recurrence then the asymptotic series.
pub fn digamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma needs a finite x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked<T: Real>(x: T) -> T {
    let mut x = x;
    let mut shift = T::zero();
    let from = T::lit(ASYMPTOTIC_FROM);
    while x < from {
        shift -= x.recip();
        x += T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_2k / 2k
    let series = inv2
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 120.0)
                    - inv2
                        * (T::lit(1.0 / 252.0)
                            - inv2
                                * (T::lit(1.0 / 240.0)
                                    - inv2
                                        * (T::lit(1.0 / 132.0)
                                            - inv2 * (T::lit(691.0 / 32760.0) - inv2 * T::lit(1.0 / 12.0)))))));
    shift + x.ln() - T::lit(0.5) * inv - series
}

/// ψ'(x) for x > 0.
pub fn trigamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("trigamma needs a finite x > 0, got {x}")));
    }
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked<T: Real>(x: T) -> T {
    let mut x = x;
    let mut acc = T::zero();
    let from = T::lit(ASYMPTOTIC_FROM);
    while x < from {
        acc += (x * x).recip();
        x += T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv
        + T::lit(0.5) * inv2
        + inv2
            * inv
            * (T::lit(1.0 / 6.0)
                - inv2
                    * (T::lit(1.0 / 30.0)
                        - inv2
                            * (T::lit(1.0 / 42.0)
                                - inv2
                                    * (T::lit(1.0 / 30.0)
                                        - inv2 * (T::lit(5.0 / 66.0) - inv2 * T::lit(691.0 / 2730.0))))));
    acc + series
}

/// Natural log of the volume of the unit l2-ball in `d` dimensions,
/// `ln(π^{d/2} / Γ(d/2 + 1))`.
///
/// Γ at integer and half-integer points is expanded into a finite product,
/// so no general log-gamma routine is needed.
pub fn ln_unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    half * std::f64::consts::PI.ln() - ln_gamma_half_integer(d + 2)
}

/// `ln Γ(m / 2)` for a positive integer `m`.
fn ln_gamma_half_integer(m: usize) -> f64 {
    assert!(m > 0);
    let mut acc = if m % 2 == 0 {
        0.0 // Γ(1)
    } else {
        0.5 * std::f64::consts::PI.ln() // Γ(1/2)
    };
    // Γ(a + 1) = a Γ(a), climbing from 1 or 1/2 to m/2
    let mut a = if m % 2 == 0 { 1.0 } else { 0.5 };
    let target = m as f64 / 2.0;
    while a < target {
        acc += a.ln();
        a += 1.0;
    }
    acc
}

/// Volume of the unit l2-ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    ln_unit_ball_volume(d).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_anchor_values() {
        assert!((digamma(1.0f64).unwrap() + EULER_GAMMA).abs() < 1e-12);
        assert!((digamma(2.0f64).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-12);
        // ψ(1/2) = -γ - 2 ln 2
        let half = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert!((digamma(0.5f64).unwrap() - half).abs() < 1e-12);
    }

    #[test]
    fn digamma_recurrence() {
        for i in 1..=10 {
            let x = i as f64;
            let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
            assert!((lhs - 1.0 / x).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn digamma_rejects_non_positive() {
        assert!(digamma(0.0f64).is_err());
        assert!(digamma(-1.5f64).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn trigamma_anchor_and_derivative() {
        // ψ'(1) = π²/6
        let pi2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((trigamma(1.0f64).unwrap() - pi2).abs() < 1e-12);
        for &x in &[0.3f64, 1.7, 4.0, 25.0] {
            let h = 1e-5;
            let fd = (digamma(x + h).unwrap() - digamma(x - h).unwrap()) / (2.0 * h);
            assert!((fd - trigamma(x).unwrap()).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn unit_ball_anchors() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        // finite in log space where the volume itself underflows
        assert!(ln_unit_ball_volume(1000).is_finite());
    }

    #[test]
    fn works_in_single_precision() {
        assert!((digamma(1.0f32).unwrap() + EULER_GAMMA as f32).abs() < 1e-6);
    }
}
