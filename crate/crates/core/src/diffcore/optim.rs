use crate::error::{shape_err, Result};
use crate::scalar::Real;

use super::params::{ParamKind, ParamStore};
use super::tensor::Tensor;

/// Moment estimates for [`adam_step`].
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub step: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> AdamState<T> {
    /// Zero moments shaped like `store`, with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(store: &ParamStore<T>) -> Self {
        Self::with_betas(store, T::lit(0.9), T::lit(0.999), T::lit(1e-8))
    }

    pub fn with_betas(store: &ParamStore<T>, beta1: T, beta2: T, eps: T) -> Self {
        let zeros: Vec<Tensor<T>> = store.ids().map(|id| Tensor::zeros(store.get(id).shape())).collect();
        AdamState {
            step: 0,
            beta1,
            beta2,
            eps,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One bias-corrected Adam update of every trainable parameter that has a gradient.
pub fn adam_step<T: Real>(
    store: &mut ParamStore<T>,
    grads: &[Option<Tensor<T>>],
    state: &mut AdamState<T>,
    lr: T,
) -> Result<()> {
    if grads.len() != store.len() || state.m.len() != store.len() {
        return Err(shape_err(
            "adam_step",
            format!("{} gradients and {} moments for {} parameters", grads.len(), state.m.len(), store.len()),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = T::one() - state.beta1.powi(t);
    let bc2 = T::one() - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    for id in store.ids().collect::<Vec<_>>() {
        if store.kind(id) != ParamKind::Trainable {
            continue;
        }
        let Some(g) = &grads[id.0] else { continue };
        if g.shape() != store.get(id).shape() {
            return Err(shape_err("adam_step", format!("gradient for {}", store.name(id))));
        }
        let m = state.m[id.0].data_mut();
        let v = state.v[id.0].data_mut();
        let p = store.get_mut(id).data_mut();
        for (((p, m), v), &g) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g.data()) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
