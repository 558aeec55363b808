//! Parameterised building blocks over a [`ParamStore`].

use rand::Rng;

use crate::diffcore::{Bound, Graph, ParamId, ParamKind, ParamStore, Tensor, Var};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

impl Mode {
    pub fn is_train(self) -> bool {
        self == Mode::Train
    }
}

/// `U(−1/√fan_in, 1/√fan_in)` for both weights and bias.
pub fn fan_in_uniform<R: Rng + ?Sized>(rng: &mut R, shape: &[usize], fan_in: usize) -> Tensor<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-bound..bound)).collect()).expect("shape")
}

#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore<f64>, name: &str, d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let w = store.add(format!("{name}.w"), fan_in_uniform(rng, &[d_in, d_out], d_in), ParamKind::Trainable);
        let b = store.add(format!("{name}.b"), fan_in_uniform(rng, &[d_out], d_in), ParamKind::Trainable);
        Linear { w, b, d_in, d_out }
    }

    pub fn forward(&self, g: &mut Graph<f64>, p: &Bound, x: Var) -> Result<Var> {
        g.linear(x, p.var(self.w), p.var(self.b))
    }
}

/// Batch normalisation with running statistics kept as store buffers.
#[derive(Clone, Copy, Debug)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
}

/// Batch statistics awaiting a running-average update.
#[derive(Clone, Debug)]
pub struct PendingStats {
    layer: BatchNorm,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl BatchNorm {
    pub fn new(store: &mut ParamStore<f64>, name: &str, dim: usize) -> Self {
        BatchNorm {
            gamma: store.add(format!("{name}.gamma"), Tensor::full(&[dim], 1.0), ParamKind::Trainable),
            beta: store.add(format!("{name}.beta"), Tensor::zeros(&[dim]), ParamKind::Trainable),
            running_mean: store.add(format!("{name}.running_mean"), Tensor::zeros(&[dim]), ParamKind::Buffer),
            running_var: store.add(format!("{name}.running_var"), Tensor::full(&[dim], 1.0), ParamKind::Buffer),
        }
    }

    pub fn forward(
        &self,
        g: &mut Graph<f64>,
        p: &Bound,
        store: &ParamStore<f64>,
        x: Var,
        mode: Mode,
        eps: f64,
        pending: &mut Vec<PendingStats>,
    ) -> Result<Var> {
        let running = match mode {
            Mode::Train => None,
            Mode::Eval => Some((store.get(self.running_mean).data(), store.get(self.running_var).data())),
        };
        let (y, stats) = g.batch_norm(x, p.var(self.gamma), p.var(self.beta), running, eps)?;
        if let Some((mean, var)) = stats {
            pending.push(PendingStats {
                layer: *self,
                mean,
                var,
            });
        }
        Ok(y)
    }
}

/// `running ← (1 − m)·running + m·batch` for every pending layer.
pub fn apply_running_stats(store: &mut ParamStore<f64>, pending: &[PendingStats], momentum: f64) {
    for s in pending {
        for (id, batch) in [(s.layer.running_mean, &s.mean), (s.layer.running_var, &s.var)] {
            for (r, &b) in store.get_mut(id).data_mut().iter_mut().zip(batch) {
                *r = (1.0 - momentum) * *r + momentum * b;
            }
        }
    }
}

/// Feed-forward head: optional input batch norm, then hidden layers of
/// linear + leaky-ReLU followed by batch norm or dropout, then a linear output.
#[derive(Clone, Debug)]
pub struct MlpHead {
    pub input_bn: Option<BatchNorm>,
    pub hidden: Vec<(Linear, Option<BatchNorm>)>,
    pub output: Linear,
    pub dropout: f64,
    pub slope: f64,
    pub bn_eps: f64,
}

pub struct MlpSpec<'a> {
    pub name: &'a str,
    pub d_in: usize,
    pub hidden: &'a [usize],
    pub d_out: usize,
    pub input_bn: bool,
    pub hidden_bn: bool,
    pub dropout: f64,
    pub slope: f64,
}

impl MlpHead {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore<f64>, spec: &MlpSpec<'_>, rng: &mut R) -> Self {
        let input_bn = spec.input_bn.then(|| BatchNorm::new(store, &format!("{}.bn_in", spec.name), spec.d_in));
        let mut d = spec.d_in;
        let mut hidden = Vec::with_capacity(spec.hidden.len());
        for (i, &h) in spec.hidden.iter().enumerate() {
            let lin = Linear::new(store, &format!("{}.hidden{i}", spec.name), d, h, rng);
            let bn = spec.hidden_bn.then(|| BatchNorm::new(store, &format!("{}.bn{i}", spec.name), h));
            hidden.push((lin, bn));
            d = h;
        }
        let output = Linear::new(store, &format!("{}.out", spec.name), d, spec.d_out, rng);
        MlpHead {
            input_bn,
            hidden,
            output,
            dropout: spec.dropout,
            slope: spec.slope,
            bn_eps: 1e-5,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn forward<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<f64>,
        p: &Bound,
        store: &ParamStore<f64>,
        x: Var,
        mode: Mode,
        rng: &mut R,
        pending: &mut Vec<PendingStats>,
    ) -> Result<Var> {
        let mut h = x;
        if let Some(bn) = &self.input_bn {
            h = bn.forward(g, p, store, h, mode, self.bn_eps, pending)?;
        }
        for (lin, bn) in &self.hidden {
            h = lin.forward(g, p, h)?;
            h = g.leaky_relu(h, self.slope);
            h = match bn {
                Some(bn) => bn.forward(g, p, store, h, mode, self.bn_eps, pending)?,
                None => g.dropout(h, self.dropout, mode.is_train(), rng)?,
            };
        }
        self.output.forward(g, p, h)
    }
}
