//! The five training losses and their weighted sum.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::LossWeights;
use super::layers::{Mode, PendingStats};
use super::model::{normalize_rows, FilterModel};
use crate::datakit::AttributeValues;
use crate::diffcore::{Bound, Graph, Tensor, Var};
use crate::error::{shape_err, Error, Result};
use crate::miest::{mi_continuous_loss, mi_discrete_loss};

/// `(1/N) Σ_i ‖x_i − x̂_i‖²`.
pub fn loss_reconstruction(g: &mut Graph<f64>, x: Var, x_hat: Var) -> Result<Var> {
    g.mse(x, x_hat)
}

/// `(1/(G·V)) Σ_g Σ_v p̄_{g,v} ln p̄_{g,v}` with `p̄` the batch mean of `[N, G, V]` probabilities.
pub fn loss_diversity(g: &mut Graph<f64>, soft_probs: Var) -> Result<Var> {
    let shape = g.shape(soft_probs).to_vec();
    if shape.len() != 3 {
        return Err(shape_err("loss_diversity", format!("expects [N, G, V], got {shape:?}")));
    }
    let mean = g.mean_over_batch(soft_probs)?;
    let plogp = g.xlogx(mean);
    let total = g.sum(plogp);
    Ok(g.scale(total, 1.0 / (shape[1] * shape[2]) as f64))
}

/// Additive angular margin loss of `features` against frozen `[C, d]` head rows.
///
/// `−(1/N) Σ_i ln(e^{ζ cos(θ_{y_i} + a)} / Z_i)`, cosines from unit-normalised
/// features and rows.
pub fn loss_aam(g: &mut Graph<f64>, features: Var, labels: &[usize], head: &Tensor<f64>, margin: f64, scale: f64) -> Result<Var> {
    if let Some(&bad) = labels.iter().find(|&&l| l >= head.rows()) {
        return Err(Error::Data(format!("speaker index {bad} outside a head of {} speakers", head.rows())));
    }
    let rows = normalize_rows(head).transpose()?;
    let rows = g.constant(rows);
    let f = g.l2_normalize(features);
    let cos = g.matmul(f, rows)?;
    let logits = g.aam_logits(cos, labels, margin, scale)?;
    g.cross_entropy(logits, labels)
}

/// Cross-entropy for class labels, mean squared error for continuous targets.
pub fn attribute_loss(g: &mut Graph<f64>, output: Var, target: &AttributeValues) -> Result<Var> {
    match target {
        AttributeValues::Discrete(labels) => g.cross_entropy(output, labels),
        AttributeValues::Continuous(values) => {
            let t = g.constant(Tensor::new(&[values.len(), 1], values.clone())?);
            g.mse(output, t)
        }
    }
}

/// Adversarial loss on `z_q`. The head receives its plain gradient; the
/// upstream model receives it reversed and scaled by the reversal constant.
pub fn loss_adversarial<R: Rng + ?Sized>(
    g: &mut Graph<f64>,
    p: &Bound,
    model: &FilterModel,
    z_q: Var,
    target: &AttributeValues,
    mode: Mode,
    rng: &mut R,
    pending: &mut Vec<PendingStats>,
) -> Result<Option<Var>> {
    match model.adversary_forward(g, p, z_q, mode, rng, pending, true)? {
        Some(out) => attribute_loss(g, out, target).map(Some),
        None => Ok(None),
    }
}

/// k-NN mutual-information loss between `z_q` and the attribute.
///
/// With `jitter > 0`, Gaussian noise of standard deviation `jitter · rms(z_q)`
/// is added first. Quantized latents repeat exactly, and the neighbour
/// counts of the estimator reward duplicates.
pub fn loss_mi<R: Rng + ?Sized>(
    g: &mut Graph<f64>,
    z_q: Var,
    target: &AttributeValues,
    k: usize,
    jitter: f64,
    rng: &mut R,
) -> Result<Var> {
    let z = if jitter > 0.0 {
        let v = g.value(z_q);
        let rms = (v.data().iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt();
        let sd = jitter * rms.max(f64::MIN_POSITIVE.sqrt());
        let shape = v.shape().to_vec();
        let noise: Vec<f64> = (0..v.len()).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        g.add_const(z_q, &Tensor::new(&shape, noise)?)?
    } else {
        z_q
    };
    match target {
        AttributeValues::Discrete(labels) => mi_discrete_loss(g, z, labels, k),
        AttributeValues::Continuous(values) => mi_continuous_loss(g, z, &Tensor::vector(values.clone()), k),
    }
}

/// Loss terms of one step; absent terms were not computed.
#[derive(Clone, Copy, Debug, Default)]
pub struct LossComponents {
    pub rec: Option<Var>,
    pub div: Option<Var>,
    pub aam: Option<Var>,
    pub adv: Option<Var>,
    pub mi: Option<Var>,
}

/// `α L_rec + β L_div + γ L_aam + δ L_adv + ε L_MI`, skipping terms with zero
/// weight or no value.
pub fn loss_total(g: &mut Graph<f64>, c: &LossComponents, w: &LossWeights) -> Result<Var> {
    let terms = [
        (c.rec, w.alpha),
        (c.div, w.beta),
        (c.aam, w.gamma),
        (c.adv, w.delta),
        (c.mi, w.epsilon),
    ];
    let mut total: Option<Var> = None;
    for (v, wt) in terms {
        let Some(v) = v else { continue };
        if wt == 0.0 {
            continue;
        }
        let scaled = g.scale(v, wt);
        total = Some(match total {
            Some(t) => g.add(t, scaled)?,
            None => scaled,
        });
    }
    total.ok_or_else(|| Error::Config("every loss weight is zero".into()))
}
