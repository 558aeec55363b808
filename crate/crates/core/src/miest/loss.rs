//! Differentiable forms of the MI estimators.
//!
//! k-th neighbour selection goes through [`Graph::topk_st`] and the `≤`
//! counts through [`Graph::heaviside_st`]. Gradients reach `Z` only.

use crate::diffcore::{Graph, Tensor, Var};
use crate::error::{shape_err, Result};
use crate::scalar::Real;
use crate::special::digamma_unchecked;

use super::{as_matrix, continuous_offset, discrete_plan, single_class};

fn self_exclusion<T: Real>(n: usize) -> Tensor<T> {
    let mut m = Tensor::full(&[n, n], T::one());
    for i in 0..n {
        m.row_mut(i)[i] = T::zero();
    }
    m
}

/// Row counts `Σ_{j≠i} H(radius_i − D_ij)`.
fn count_within<T: Real>(g: &mut Graph<T>, radius: Var, dist: Var, n: usize) -> Result<Var> {
    let diff = g.column_minus(radius, dist)?;
    let step = g.heaviside_st(diff);
    let step = g.mul_const(step, self_exclusion(n))?;
    Ok(g.sum_rows(step))
}

fn rows_of<T: Real>(g: &Graph<T>, z: Var, k: usize) -> Result<usize> {
    let shape = g.shape(z);
    if shape.len() != 2 {
        return Err(shape_err("mi loss", format!("Z must be [N, d], got {shape:?}")));
    }
    let n = shape[0];
    if k == 0 || n <= k {
        return Err(crate::Error::Estimation(format!("need N > k >= 1, got N = {n}, k = {k}")));
    }
    Ok(n)
}

/// Differentiable [`mi_discrete`](super::mi_discrete); the forward value is identical.
pub fn mi_discrete_loss<T: Real>(g: &mut Graph<T>, z: Var, labels: &[usize], k: usize) -> Result<Var> {
    let n = rows_of(g, z, k)?;
    if labels.len() != n {
        return Err(shape_err("mi_discrete_loss", format!("{n} rows, {} labels", labels.len())));
    }
    if single_class(labels) {
        return Ok(g.constant(Tensor::scalar(T::zero())));
    }
    let plan = discrete_plan::<T>(labels, k)?;
    let psi_n = digamma_unchecked(T::from_count(n));
    let psi_k = digamma_unchecked(T::from_count(k));

    let dist = g.pairwise_distance(z)?;
    let mut other_class = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for (j, v) in other_class.row_mut(i).iter_mut().enumerate() {
            if j == i || labels[j] != labels[i] {
                *v = T::infinity();
            }
        }
    }
    let same = g.add_const(dist, &other_class)?;
    let kth = g.topk_st(same, k)?.values;
    let nz = count_within(g, kth, dist, n)?;

    let psi = g.digamma(nz)?;
    let neg = g.scale(psi, -T::one());
    let b = g.add_const(neg, &Tensor::full(&[n], psi_k))?;
    let a: Vec<T> = plan
        .class_size
        .iter()
        .map(|&s| psi_n - digamma_unchecked(T::from_count(s)))
        .collect();
    let term = g.add_const(b, &Tensor::vector(a))?;
    let masked = g.mul_const(term, Tensor::vector(plan.mask))?;
    let total = g.sum(masked);
    Ok(g.scale(total, T::from_count(plan.included).recip()))
}

/// Differentiable [`mi_continuous`](super::mi_continuous); the forward value is identical.
pub fn mi_continuous_loss<T: Real>(g: &mut Graph<T>, z: Var, y: &Tensor<T>, k: usize) -> Result<Var> {
    let n = rows_of(g, z, k)?;
    let y = as_matrix(y)?;
    if y.rows() != n {
        return Err(shape_err("mi_continuous_loss", format!("{n} rows of Z, {} of Y", y.rows())));
    }
    let (dz, dy) = (g.shape(z)[1], y.cols());
    let yv = g.constant(y);

    let joint = g.concat(z, yv)?;
    let djoint = g.pairwise_distance(joint)?;
    let mut diag = Tensor::zeros(&[n, n]);
    for i in 0..n {
        diag.row_mut(i)[i] = T::infinity();
    }
    let djoint = g.add_const(djoint, &diag)?;
    let rho = g.topk_st(djoint, k)?.values;

    let dzm = g.pairwise_distance(z)?;
    let dym = g.pairwise_distance(yv)?;
    let nz = count_within(g, rho, dzm, n)?;
    let ny = count_within(g, rho, dym, n)?;
    let lz = g.ln(nz);
    let ly = g.ln(ny);
    let terms = g.add(lz, ly)?;
    let mean = g.mean(terms);
    let neg = g.scale(mean, -T::one());
    g.add_const(neg, &Tensor::scalar(continuous_offset::<T>(n, k, dz, dy)))
}
