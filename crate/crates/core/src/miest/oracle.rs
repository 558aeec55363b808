//! Closed-form and quadrature reference values for testing the estimators.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// MI of a bivariate Gaussian with correlation `rho`: `−½ ln(1 − ρ²)`.
pub fn mi_oracle_gaussian(rho: f64) -> Result<f64> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::Domain(format!("correlation must lie in (-1, 1), got {rho}")));
    }
    Ok(-0.5 * (1.0 - rho * rho).ln())
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, fc: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

/// Differential entropy of a 1-D Gaussian mixture with shared variance, by
/// adaptive Simpson quadrature over ±12 standard deviations of the extreme means.
pub fn mixture_entropy(means: &[f64], priors: &[f64], variance: f64) -> Result<f64> {
    validate(means, priors, variance)?;
    let sd = variance.sqrt();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min) - 12.0 * sd;
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 12.0 * sd;
    let density = |x: f64| -> f64 {
        means
            .iter()
            .zip(priors)
            .map(|(&m, &p)| p * normal_pdf(x, m, variance))
            .sum()
    };
    let integrand = |x: f64| {
        let p = density(x);
        if p > 0.0 {
            -p * p.ln()
        } else {
            0.0
        }
    };
    // split at the means so every kink of the integrand lands on a panel edge
    let mut edges: Vec<f64> = vec![lo];
    let mut inner: Vec<f64> = means.to_vec();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);
    Ok(edges
        .windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], 1e-10, 40))
        .sum())
}

fn validate(means: &[f64], priors: &[f64], variance: f64) -> Result<()> {
    if means.is_empty() || means.len() != priors.len() {
        return Err(Error::Domain("need one prior per component".into()));
    }
    if !(variance > 0.0) {
        return Err(Error::Domain(format!("variance must be positive, got {variance}")));
    }
    let total: f64 = priors.iter().sum();
    if priors.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("priors must be a distribution, sum to {total}")));
    }
    Ok(())
}

/// MI between a class label and a 1-D Gaussian observation whose mean depends
/// on the class: `H(mixture) − H(component)`.
pub fn mi_oracle_mixture(means: &[f64], priors: &[f64], variance: f64) -> Result<f64> {
    let h_mix = mixture_entropy(means, priors, variance)?;
    let h_comp = 0.5 * (2.0 * PI * std::f64::consts::E * variance).ln();
    Ok((h_mix - h_comp).max(0.0))
}
