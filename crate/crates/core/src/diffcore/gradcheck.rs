//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::graph::{Graph, Var};
use super::tensor::Tensor;

/// Largest discrepancy found by [`check_gradients`].
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub input: usize,
    pub element: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Relative error with magnitudes floored at `1e-4`, so that gradients near
/// zero are compared on an absolute scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Compares backward-pass gradients of a scalar function of `inputs` with
/// central differences of step `h`, for every input element.
///
/// `f` receives a fresh graph and one variable per input and returns the scalar.
pub fn check_gradients<T, F>(f: F, inputs: &[Tensor<T>], h: f64) -> Result<GradCheckReport>
where
    T: Real,
    F: Fn(&mut Graph<T>, &[Var]) -> Result<Var>,
{
    let eval = |vals: &[Tensor<T>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = vals.iter().map(|v| g.constant(v.clone())).collect();
        let out = f(&mut g, &vars)?;
        Ok(g.value(out).item().as_f64())
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|v| g.variable(v.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        input: 0,
        element: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let mut work: Vec<Tensor<T>> = inputs.to_vec();
    for (i, var) in vars.iter().enumerate() {
        for e in 0..inputs[i].len() {
            let orig = inputs[i].data()[e];
            work[i].data_mut()[e] = orig + T::lit(h);
            let plus = eval(&work)?;
            work[i].data_mut()[e] = orig - T::lit(h);
            let minus = eval(&work)?;
            work[i].data_mut()[e] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads.get(*var).map_or(0.0, |t| t.data()[e].as_f64());
            if !numeric.is_finite() || !analytic.is_finite() {
                return Err(Error::Numerical(format!("non-finite gradient at input {i}[{e}]")));
            }
            let err = relative_error(analytic, numeric);
            if err > report.max_rel_err {
                report = GradCheckReport {
                    max_rel_err: err,
                    input: i,
                    element: e,
                    analytic,
                    numeric,
                };
            }
        }
    }
    Ok(report)
}
