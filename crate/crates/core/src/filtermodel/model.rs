use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::FilterConfig;
use super::layers::{Linear, MlpHead, MlpSpec, Mode, PendingStats};
use crate::diffcore::{Bound, Graph, ParamId, ParamKind, ParamStore, Tensor, Var};
use crate::error::{shape_err, Result};

/// Independent RNG streams of one seed, so that adding or removing a
/// component never shifts the randomness seen by the others.
pub(crate) mod stream {
    pub const FILTER_INIT: u64 = 0;
    pub const ADVERSARY_INIT: u64 = 1;
    pub const SPEAKER_INIT: u64 = 2;
    pub const BATCHES: u64 = 3;
    pub const DROPOUT: u64 = 4;
    pub const GUMBEL: u64 = 5;
    pub const MI_JITTER: u64 = 6;
    pub const ATTACKER_INIT: u64 = 7;
    pub const ATTACKER_BATCHES: u64 = 8;
    pub const ATTACKER_DROPOUT: u64 = 9;
}

pub(crate) fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rows scaled to unit l2 norm.
pub fn normalize_rows(w: &Tensor<f64>) -> Tensor<f64> {
    let mut out = w.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let n = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        row.iter_mut().for_each(|v| *v /= n);
    }
    out
}

/// Encoder, product quantizer, conditioned decoder, frozen speaker head and
/// optional adversarial head.
#[derive(Clone, Debug)]
pub struct FilterModel {
    pub config: FilterConfig,
    pub params: ParamStore<f64>,
    encoder: Vec<Linear>,
    quant_logits: Linear,
    codebook: ParamId,
    quant_out: Linear,
    conditioning: Linear,
    decoder: Vec<Linear>,
    decoder_out: Linear,
    speaker: ParamId,
    adversary: Option<MlpHead>,
}

/// Graph handles of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ForwardPass {
    pub z: Var,
    pub z_q: Var,
    /// `[N, G, V]` Gumbel-softmax probabilities; training mode only.
    pub soft_probs: Option<Var>,
    pub x_hat: Var,
}

impl FilterModel {
    /// Fresh model. The adversarial head exists only when `δ > 0`.
    pub fn new(config: FilterConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let mut store = ParamStore::new();
        let mut rng = rng_stream(seed, stream::FILTER_INIT);

        let mut encoder = Vec::new();
        let mut d = c.input_dim;
        for (i, &h) in c.encoder_hidden.iter().enumerate() {
            encoder.push(Linear::new(&mut store, &format!("encoder.{i}"), d, h, &mut rng));
            d = h;
        }
        let gv = c.num_codebooks * c.codewords_per_book;
        let quant_logits = Linear::new(&mut store, "quantizer.logits", d, gv, &mut rng);
        let book: Vec<f64> = (0..gv * c.codeword_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let codebook = store.add(
            "quantizer.codebook",
            Tensor::new(&[c.num_codebooks, c.codewords_per_book, c.codeword_dim], book)?,
            ParamKind::Trainable,
        );
        let quant_out = Linear::new(&mut store, "quantizer.out", c.codes_dim(), c.quantizer_output_dim, &mut rng);
        let conditioning = Linear::new(&mut store, "conditioning", c.attr_dim(), c.conditioning_dim, &mut rng);
        let mut decoder = Vec::new();
        let mut d = c.decoder_input_dim();
        for (i, &h) in c.decoder_hidden.iter().enumerate() {
            decoder.push(Linear::new(&mut store, &format!("decoder.{i}"), d, h, &mut rng));
            d = h;
        }
        let decoder_out = Linear::new(&mut store, "decoder.out", d, c.input_dim, &mut rng);

        let mut srng = rng_stream(seed, stream::SPEAKER_INIT);
        let spk: Vec<f64> = (0..c.num_speakers * c.input_dim).map(|_| StandardNormal.sample(&mut srng)).collect();
        let spk = normalize_rows(&Tensor::new(&[c.num_speakers, c.input_dim], spk)?);
        let speaker = store.add("speaker_head.w", spk, ParamKind::Frozen);

        let adversary = (c.weights.delta > 0.0).then(|| {
            let mut arng = rng_stream(seed, stream::ADVERSARY_INIT);
            let hidden = vec![c.adversary_hidden; c.adversary_layers];
            let mut head = MlpHead::new(
                &mut store,
                &MlpSpec {
                    name: "adversary",
                    d_in: c.quantizer_output_dim,
                    hidden: &hidden,
                    d_out: c.attr_dim(),
                    input_bn: true,
                    hidden_bn: true,
                    dropout: 0.0,
                    slope: c.leaky_slope,
                },
                &mut arng,
            );
            head.bn_eps = c.bn_eps;
            head
        });

        Ok(FilterModel {
            config,
            params: store,
            encoder,
            quant_logits,
            codebook,
            quant_out,
            conditioning,
            decoder,
            decoder_out,
            speaker,
            adversary,
        })
    }

    pub fn has_adversary(&self) -> bool {
        self.adversary.is_some()
    }

    pub fn adversary(&self) -> Option<&MlpHead> {
        self.adversary.as_ref()
    }

    /// `[c_spk, n]` frozen speaker-head rows.
    pub fn speaker_head(&self) -> &Tensor<f64> {
        self.params.get(self.speaker)
    }

    /// Installs pretrained speaker-head rows, normalised to unit length.
    pub fn set_speaker_head(&mut self, w: &Tensor<f64>) -> Result<()> {
        self.params.set(self.speaker, normalize_rows(w))
    }

    pub fn encode<R: Rng + ?Sized>(&self, g: &mut Graph<f64>, p: &Bound, x: Var, mode: Mode, rng: &mut R) -> Result<Var> {
        if g.shape(x).len() != 2 || g.shape(x)[1] != self.config.input_dim {
            return Err(shape_err("encode", format!("input {:?}, expected [N, {}]", g.shape(x), self.config.input_dim)));
        }
        let mut h = x;
        for lin in &self.encoder {
            h = lin.forward(g, p, h)?;
            h = g.leaky_relu(h, self.config.leaky_slope);
            h = g.dropout(h, self.config.dropout, mode.is_train(), rng)?;
        }
        Ok(h)
    }

    /// Hard Gumbel-softmax selection in training, plain argmax in evaluation;
    /// selected codewords are concatenated and projected to `z_q`.
    pub fn quantize<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<f64>,
        p: &Bound,
        z: Var,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(Var, Option<Var>)> {
        let c = &self.config;
        let n = g.shape(z)[0];
        let logits = self.quant_logits.forward(g, p, z)?;
        let logits = g.reshape(logits, &[n, c.num_codebooks, c.codewords_per_book])?;
        let (sel, soft) = match mode {
            Mode::Train => {
                let s = g.gumbel_softmax_st(logits, c.temperature, true, rng)?;
                (s.selections, Some(s.soft_probs))
            }
            Mode::Eval => (g.argmax_one_hot(logits), None),
        };
        let codes = g.codebook_lookup(sel, p.var(self.codebook))?;
        let z_q = self.quant_out.forward(g, p, codes)?;
        Ok((z_q, soft))
    }

    pub fn condition_and_decode<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<f64>,
        p: &Bound,
        z_q: Var,
        attr_logits: Var,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let want = [g.shape(z_q)[0], self.config.attr_dim()];
        if g.shape(attr_logits) != want {
            return Err(shape_err("condition_and_decode", format!("logits {:?}, expected {want:?}", g.shape(attr_logits))));
        }
        let cond = self.conditioning.forward(g, p, attr_logits)?;
        let mut h = g.concat(z_q, cond)?;
        for lin in &self.decoder {
            h = lin.forward(g, p, h)?;
            h = g.leaky_relu(h, self.config.leaky_slope);
            h = g.dropout(h, self.config.dropout, mode.is_train(), rng)?;
        }
        self.decoder_out.forward(g, p, h)
    }

    /// Encoder through decoder on a bound graph.
    #[allow(clippy::too_many_arguments)]
    pub fn forward<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        g: &mut Graph<f64>,
        p: &Bound,
        x: Var,
        attr_logits: Var,
        mode: Mode,
        dropout_rng: &mut R1,
        gumbel_rng: &mut R2,
    ) -> Result<ForwardPass> {
        let z = self.encode(g, p, x, mode, dropout_rng)?;
        let (z_q, soft_probs) = self.quantize(g, p, z, mode, gumbel_rng)?;
        let x_hat = self.condition_and_decode(g, p, z_q, attr_logits, mode, dropout_rng)?;
        Ok(ForwardPass { z, z_q, soft_probs, x_hat })
    }

    /// Adversary logits (or regression output) behind gradient reversal.
    pub fn adversary_forward<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<f64>,
        p: &Bound,
        z_q: Var,
        mode: Mode,
        rng: &mut R,
        pending: &mut Vec<PendingStats>,
        reverse: bool,
    ) -> Result<Option<Var>> {
        let Some(head) = &self.adversary else { return Ok(None) };
        let input = if reverse { g.grad_reverse(z_q, self.config.grl_lambda) } else { z_q };
        head.forward(g, p, &self.params, input, mode, rng, pending).map(Some)
    }

    const CHUNK: usize = 256;

    /// Evaluation-mode filtering `x̂ = F(x | logits)`, in row chunks.
    pub fn transform(&self, x: &Tensor<f64>, attr_logits: &Tensor<f64>) -> Result<Tensor<f64>> {
        self.eval_rows(x, attr_logits, |_, pass| pass.x_hat)
    }

    /// Evaluation-mode quantized latents `z_q`.
    pub fn latents(&self, x: &Tensor<f64>) -> Result<Tensor<f64>> {
        let dummy = Tensor::zeros(&[x.rows(), self.config.attr_dim()]);
        self.eval_rows(x, &dummy, |_, pass| pass.z_q)
    }

    fn eval_rows(&self, x: &Tensor<f64>, logits: &Tensor<f64>, pick: impl Fn(&Graph<f64>, &ForwardPass) -> Var) -> Result<Tensor<f64>> {
        if x.shape().len() != 2 || logits.shape().len() != 2 || x.rows() != logits.rows() {
            return Err(shape_err("transform", format!("inputs {:?} and logits {:?}", x.shape(), logits.shape())));
        }
        let n = x.rows();
        let mut out: Vec<f64> = Vec::new();
        let mut cols = 0;
        let mut no_rng = rand::rngs::mock::StepRng::new(0, 0);
        let mut no_rng2 = no_rng.clone();
        for start in (0..n).step_by(Self::CHUNK) {
            let end = (start + Self::CHUNK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let mut g = Graph::new();
            let p = self.params.bind_constants(&mut g);
            let xv = g.constant(crate::datakit::gather_rows(x, &idx));
            let lv = g.constant(crate::datakit::gather_rows(logits, &idx));
            let pass = self.forward(&mut g, &p, xv, lv, Mode::Eval, &mut no_rng, &mut no_rng2)?;
            let v = g.value(pick(&g, &pass));
            cols = v.cols();
            out.extend_from_slice(v.data());
        }
        Tensor::new(&[n, cols], out)
    }
}
