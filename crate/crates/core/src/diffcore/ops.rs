//! Forward operations. Each records itself on the graph for the backward pass.

use rand::Rng;

use crate::error::{shape_err, Result};
use crate::scalar::Real;
use crate::special::digamma_unchecked;

use super::graph::{check_same_shape, domain, Graph, Op, Var};
use super::tensor::{l2_distance, Tensor};

/// Output of [`Graph::gumbel_softmax_st`].
#[derive(Clone, Copy, Debug)]
pub struct GumbelSelection {
    /// One-hot forward values (hard mode) carrying the soft gradient path.
    pub selections: Var,
    /// Perturbed softmax probabilities.
    pub soft_probs: Var,
}

/// Output of [`Graph::topk_st`].
#[derive(Clone, Debug)]
pub struct KthSelection<T> {
    pub values: Var,
    pub indices: Vec<usize>,
    /// 1 at the selected entry of each row, 0 elsewhere.
    pub gradient_mask: Tensor<T>,
}

/// Standard Gumbel noise `-ln(-ln u)`, `u ~ U(0, 1)` with `u` kept off 0.
pub fn sample_gumbel<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let u: f64 = rng.gen::<f64>();
    let u = u.max(f64::MIN_POSITIVE);
    T::lit(-(-u.ln()).ln())
}

/// Row-wise softmax of a value tensor over its last dimension.
pub fn softmax_rows<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

fn log_softmax_rows<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
    out
}

fn first_argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

impl<T: Real> Graph<T> {
    /// `input · weights + bias` for `[N, d_in] x [d_in, d_out] + [d_out]`.
    pub fn linear(&mut self, input: Var, weights: Var, bias: Var) -> Result<Var> {
        let xw = self.matmul(input, weights)?;
        self.add_bias(xw, bias)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    /// Adds a `[cols]` vector to every row.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let xv = self.value(x);
        let bv = self.value(bias);
        if bv.shape().len() != 1 || bv.len() != xv.cols() {
            return Err(shape_err(
                "add_bias",
                format!("bias {:?} for input {:?}", bv.shape(), xv.shape()),
            ));
        }
        let mut out = xv.clone();
        let cols = out.cols();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += bv.data()[i % cols];
        }
        Ok(self.push(out, Op::AddBias(x, bias), &[x, bias]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same_shape(self, "add", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(v, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same_shape(self, "sub", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(v, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same_shape(self, "mul", a, b)?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(v, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, x: Var, c: T) -> Var {
        let v = self.value(x).map(|e| e * c);
        self.push(v, Op::Scale(x, c), &[x])
    }

    /// Adds a constant tensor of the same shape.
    pub fn add_const(&mut self, x: Var, c: &Tensor<T>) -> Result<Var> {
        if self.shape(x) != c.shape() {
            return Err(shape_err("add_const", format!("{:?} vs {:?}", self.shape(x), c.shape())));
        }
        let v = self.value(x).zip_map(c, |a, b| a + b);
        Ok(self.push(v, Op::AddConst(x), &[x]))
    }

    /// Elementwise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, x: Var, c: Tensor<T>) -> Result<Var> {
        if self.shape(x) != c.shape() {
            return Err(shape_err("mul_const", format!("{:?} vs {:?}", self.shape(x), c.shape())));
        }
        let v = self.value(x).zip_map(&c, |a, b| a * b);
        Ok(self.push(v, Op::MulConst(x, c), &[x]))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: T) -> Var {
        let v = self.value(x).map(|e| if e > T::zero() { e } else { e * slope });
        self.push(v, Op::LeakyRelu(x, slope), &[x])
    }

    /// Batch normalisation over the rows of `[N, C]`.
    ///
    /// With `running = None` the batch statistics are used (training mode);
    /// with `Some((mean, var))` the given statistics are treated as constants.
    /// Returns the output and, in training mode, the biased batch mean and
    /// unbiased batch variance for the caller's running averages.
    #[allow(clippy::type_complexity)]
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running: Option<(&[T], &[T])>,
        eps: T,
    ) -> Result<(Var, Option<(Vec<T>, Vec<T>)>)> {
        let xv = self.value(x);
        if xv.shape().len() != 2 {
            return Err(shape_err("batch_norm", format!("expects [N, C], got {:?}", xv.shape())));
        }
        let (n, c) = (xv.shape()[0], xv.shape()[1]);
        if self.value(gamma).len() != c || self.value(beta).len() != c {
            return Err(shape_err("batch_norm", "affine parameters do not match channels"));
        }
        let (mean, var, stats) = match running {
            Some((m, v)) => (m.to_vec(), v.to_vec(), None),
            None => {
                if n < 2 {
                    return Err(domain("batch_norm in training mode needs at least 2 rows"));
                }
                let nf = T::from_count(n);
                let mut mean = vec![T::zero(); c];
                for row in xv.iter_rows() {
                    for (m, &v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= nf;
                }
                let mut var = vec![T::zero(); c];
                for row in xv.iter_rows() {
                    for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                        *s += (v - m) * (v - m);
                    }
                }
                let unbiased: Vec<T> = var.iter().map(|&s| s / (nf - T::one())).collect();
                for s in &mut var {
                    *s /= nf;
                }
                (mean.clone(), var, Some((mean, unbiased)))
            }
        };
        let inv_std: Vec<T> = var.iter().map(|&v| (v + eps).sqrt().recip()).collect();
        let mut xhat = xv.clone();
        for r in 0..n {
            for (j, v) in xhat.row_mut(r).iter_mut().enumerate() {
                *v = (*v - mean[j]) * inv_std[j];
            }
        }
        let gam = self.value(gamma).data();
        let bet = self.value(beta).data();
        let mut out = xhat.clone();
        for r in 0..n {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = *v * gam[j] + bet[j];
            }
        }
        let batch_stats = running.is_none();
        let var_out = self.push(
            out,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_stats,
            },
            &[x, gamma, beta],
        );
        Ok((var_out, stats))
    }

    /// Inverted dropout: kept units are scaled by `1 / (1 - p)` during training.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, train: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(domain(format!("dropout probability must be in [0, 1), got {p}")));
        }
        if !train || p == 0.0 {
            return Ok(x);
        }
        let keep = T::lit(1.0 / (1.0 - p));
        let shape = self.shape(x).to_vec();
        let n: usize = shape.iter().product();
        let mask: Vec<T> = (0..n)
            .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
            .collect();
        self.mul_const(x, Tensor::new(&shape, mask)?)
    }

    /// Softmax over the last dimension.
    pub fn softmax(&mut self, x: Var) -> Var {
        let v = softmax_rows(self.value(x));
        self.push(v, Op::Softmax(x), &[x])
    }

    pub fn log_softmax(&mut self, x: Var) -> Var {
        let v = log_softmax_rows(self.value(x));
        self.push(v, Op::LogSoftmax(x), &[x])
    }

    /// Mean negative log-likelihood of integer labels under row-softmax of `logits`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        if lv.shape().len() != 2 || lv.rows() != labels.len() {
            return Err(shape_err(
                "cross_entropy",
                format!("logits {:?} for {} labels", lv.shape(), labels.len()),
            ));
        }
        let c = lv.cols();
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(domain(format!("label {bad} out of range for {c} classes")));
        }
        let logp = log_softmax_rows(lv);
        let mut total = T::zero();
        for (r, &lab) in labels.iter().enumerate() {
            total -= logp.row(r)[lab];
        }
        let loss = total / T::from_count(labels.len());
        let probs = logp.map(|v| v.exp());
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            &[logits],
        ))
    }

    /// Batch mean of squared l2 row differences: `(1/N) Σ_i ‖a_i − b_i‖²`.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        let n = self.value(a).rows();
        let d = self.sub(a, b)?;
        let sq = self.mul(d, d)?;
        let s = self.sum(sq);
        Ok(self.scale(s, T::from_count(n).recip()))
    }

    /// Concatenation along the last dimension of two `[N, *]` tensors.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.shape().len() != 2 || bv.shape().len() != 2 || av.rows() != bv.rows() {
            return Err(shape_err("concat", format!("{:?} | {:?}", av.shape(), bv.shape())));
        }
        let rows = av.rows();
        let cols = av.cols() + bv.cols();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            data.extend_from_slice(av.row(r));
            data.extend_from_slice(bv.row(r));
        }
        let v = Tensor::new(&[rows, cols], data)?;
        Ok(self.push(v, Op::Concat(a, b), &[a, b]))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(x).clone().reshape(shape)?;
        Ok(self.push(v, Op::Reshape(x), &[x]))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x).transpose()?;
        Ok(self.push(v, Op::Transpose(x), &[x]))
    }

    /// Scales every row to unit l2 norm (norms floored at `1e-12`).
    pub fn l2_normalize(&mut self, x: Var) -> Var {
        let mut v = self.value(x).clone();
        let floor = T::lit(1e-12);
        let mut norms = Vec::with_capacity(v.rows());
        for r in 0..v.rows() {
            let row = v.row_mut(r);
            let norm = row.iter().map(|&e| e * e).sum::<T>().sqrt().max(floor);
            for e in row.iter_mut() {
                *e /= norm;
            }
            norms.push(norm);
        }
        self.push(v, Op::L2Normalize { x, norms }, &[x])
    }

    /// Row-wise cosine similarity of two `[N, d]` tensors, giving `[N]`.
    pub fn cosine_similarity(&mut self, a: Var, b: Var) -> Result<Var> {
        check_same_shape(self, "cosine_similarity", a, b)?;
        let an = self.l2_normalize(a);
        let bn = self.l2_normalize(b);
        let prod = self.mul(an, bn)?;
        Ok(self.sum_rows(prod))
    }

    /// `[N, d]` rows to the `[N, N]` Euclidean distance matrix.
    pub fn pairwise_distance(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() != 2 {
            return Err(shape_err("pairwise_distance", format!("expects [N, d], got {:?}", xv.shape())));
        }
        let n = xv.rows();
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    data[i * n + j] = l2_distance(xv.row(i), xv.row(j));
                }
            }
        }
        let v = Tensor::new(&[n, n], data)?;
        Ok(self.push(v, Op::PairwiseDistance(x), &[x]))
    }

    /// Forward value `forward`, backward the identity into `src`.
    pub fn straight_through(&mut self, src: Var, forward: Tensor<T>) -> Result<Var> {
        if self.shape(src) != forward.shape() {
            return Err(shape_err(
                "straight_through",
                format!("{:?} vs {:?}", self.shape(src), forward.shape()),
            ));
        }
        Ok(self.push(forward, Op::StraightThrough(src), &[src]))
    }

    /// Heaviside step (1 where `x >= 0`) with an identity surrogate gradient.
    pub fn heaviside_st(&mut self, x: Var) -> Var {
        let step = self.value(x).map(|v| if v >= T::zero() { T::one() } else { T::zero() });
        self.push(step, Op::StraightThrough(x), &[x])
    }

    /// Identity forward, gradient multiplied by `-lambda` on the way back.
    pub fn grad_reverse(&mut self, x: Var, lambda: T) -> Var {
        let v = self.value(x).clone();
        self.push(v, Op::GradScale(x, -lambda), &[x])
    }

    /// Per row, the `k`-th smallest entry (1-based), ties resolved to the
    /// lowest column index. Gradients flow only to the selected entries.
    pub fn topk_st(&mut self, values: Var, k: usize) -> Result<KthSelection<T>> {
        let v = self.value(values);
        let m = v.cols();
        if k == 0 || k > m {
            return Err(domain(format!("k = {k} must lie in 1..={m}")));
        }
        let mut indices = Vec::with_capacity(v.rows());
        let mut order: Vec<usize> = Vec::with_capacity(m);
        for row in v.iter_rows() {
            order.clear();
            order.extend(0..m);
            order.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            indices.push(order[k - 1]);
        }
        let mut mask = Tensor::zeros(v.shape());
        for (r, &j) in indices.iter().enumerate() {
            mask.row_mut(r)[j] = T::one();
        }
        let values = self.gather(values, &indices)?;
        Ok(KthSelection {
            values,
            indices,
            gradient_mask: mask,
        })
    }

    /// `out[i] = x[i, idx[i]]` for a `[N, M]` tensor.
    pub fn gather(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape().len() != 2 || xv.rows() != idx.len() {
            return Err(shape_err("gather", format!("{:?} with {} indices", xv.shape(), idx.len())));
        }
        let m = xv.cols();
        if let Some(&bad) = idx.iter().find(|&&j| j >= m) {
            return Err(domain(format!("gather index {bad} out of range {m}")));
        }
        let data: Vec<T> = idx.iter().enumerate().map(|(r, &j)| xv.row(r)[j]).collect();
        let v = Tensor::vector(data);
        Ok(self.push(
            v,
            Op::Gather {
                x,
                idx: idx.to_vec(),
            },
            &[x],
        ))
    }

    /// Sum over the last dimension.
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let data: Vec<T> = xv.iter_rows().map(|r| r.iter().copied().sum()).collect();
        let mut shape = xv.shape().to_vec();
        shape.pop();
        let v = Tensor::new(&shape, data).expect("row sums match shape");
        self.push(v, Op::SumRows(x), &[x])
    }

    /// Mean over the first (batch) dimension.
    pub fn mean_over_batch(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let Some((&n, rest)) = xv.shape().split_first() else {
            return Err(shape_err("mean_over_batch", "scalar input"));
        };
        let inner: usize = rest.iter().product();
        let mut data = vec![T::zero(); inner];
        for chunk in xv.data().chunks(inner.max(1)) {
            for (acc, &v) in data.iter_mut().zip(chunk) {
                *acc += v;
            }
        }
        let nf = T::from_count(n);
        for v in &mut data {
            *v /= nf;
        }
        let v = Tensor::new(rest, data)?;
        Ok(self.push(v, Op::MeanOverBatch(x), &[x]))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s: T = self.value(x).data().iter().copied().sum();
        self.push(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    /// Mean of all entries; summed in index order, then divided.
    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let s: T = xv.data().iter().copied().sum();
        let m = s / T::from_count(xv.len());
        self.push(Tensor::scalar(m), Op::Mean(x), &[x])
    }

    pub fn ln(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|e| e.ln());
        self.push(v, Op::Log(x), &[x])
    }

    /// Elementwise ψ. Inputs must be positive.
    pub fn digamma(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if let Some(bad) = xv.data().iter().find(|&&v| !(v > T::zero())) {
            return Err(domain(format!("digamma of non-positive value {bad}")));
        }
        let v = xv.map(digamma_unchecked);
        Ok(self.push(v, Op::Digamma(x), &[x]))
    }

    /// Elementwise `x ln x` with `0 ln 0 = 0`.
    pub fn xlogx(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|e| if e == T::zero() { T::zero() } else { e * e.ln() });
        self.push(v, Op::XLogX(x), &[x])
    }

    /// `out[i, j] = col[i] − m[i, j]`.
    pub fn column_minus(&mut self, col: Var, m: Var) -> Result<Var> {
        let cv = self.value(col);
        let mv = self.value(m);
        if cv.shape().len() != 1 || mv.shape().len() != 2 || cv.len() != mv.rows() {
            return Err(shape_err("column_minus", format!("{:?} - {:?}", cv.shape(), mv.shape())));
        }
        let mut out = mv.clone();
        for r in 0..out.rows() {
            let c = cv.data()[r];
            for v in out.row_mut(r) {
                *v = c - *v;
            }
        }
        Ok(self.push(out, Op::ColumnMinus { col, m }, &[col, m]))
    }

    /// Gumbel-softmax over the last dimension of `[N, G, V]` logits.
    ///
    /// `soft_probs` is the softmax of `(logits + η) / τ`. With `hard`, the
    /// forward selection is one-hot at each row's argmax while gradients follow
    /// `soft_probs`; otherwise selections are `soft_probs` themselves.
    pub fn gumbel_softmax_st<R: Rng + ?Sized>(
        &mut self,
        logits: Var,
        temperature: T,
        hard: bool,
        rng: &mut R,
    ) -> Result<GumbelSelection> {
        if !(temperature > T::zero()) {
            return Err(domain(format!("temperature must be positive, got {temperature}")));
        }
        let shape = self.shape(logits).to_vec();
        let n: usize = shape.iter().product();
        let noise: Vec<T> = (0..n).map(|_| sample_gumbel(rng)).collect();
        let noise = Tensor::new(&shape, noise)?;
        let perturbed = self.add_const(logits, &noise)?;
        let tempered = self.scale(perturbed, temperature.recip());
        let soft_probs = self.softmax(tempered);
        let selections = if hard {
            let sv = self.value(soft_probs);
            let mut onehot = Tensor::zeros(sv.shape());
            for r in 0..sv.rows() {
                let j = first_argmax(sv.row(r));
                onehot.row_mut(r)[j] = T::one();
            }
            self.straight_through(soft_probs, onehot)?
        } else {
            soft_probs
        };
        Ok(GumbelSelection {
            selections,
            soft_probs,
        })
    }

    /// One-hot argmax over the last dimension; no gradient.
    pub fn argmax_one_hot(&mut self, logits: Var) -> Var {
        let lv = self.value(logits);
        let mut onehot = Tensor::zeros(lv.shape());
        for r in 0..lv.rows() {
            let j = first_argmax(lv.row(r));
            onehot.row_mut(r)[j] = T::one();
        }
        self.constant(onehot)
    }

    /// Selects codewords: `sel` is `[N, G, V]` (or `[N, G*V]`), `book` is
    /// `[G, V, W]`, output `[N, G*W]` with group `g` filled by `sel[:, g, :] · book[g]`.
    pub fn codebook_lookup(&mut self, sel: Var, book: Var) -> Result<Var> {
        let bv = self.value(book);
        if bv.shape().len() != 3 {
            return Err(shape_err("codebook_lookup", format!("codebook {:?}", bv.shape())));
        }
        let (groups, entries, width) = (bv.shape()[0], bv.shape()[1], bv.shape()[2]);
        let sv = self.value(sel);
        let gv = groups * entries;
        if sv.len() % gv != 0 || sv.shape()[0] * gv != sv.len() {
            return Err(shape_err(
                "codebook_lookup",
                format!("selection {:?} for codebook {:?}", sv.shape(), bv.shape()),
            ));
        }
        let n = sv.shape()[0];
        let gw = groups * width;
        let mut out = vec![T::zero(); n * gw];
        for grp in 0..groups {
            T::gemm(
                n,
                entries,
                width,
                T::one(),
                &sv.data()[grp * entries..],
                (gv as isize, 1),
                &bv.data()[grp * entries * width..],
                (width as isize, 1),
                T::zero(),
                &mut out[grp * width..],
                (gw as isize, 1),
            );
        }
        let v = Tensor::new(&[n, gw], out)?;
        Ok(self.push(
            v,
            Op::CodebookLookup {
                sel,
                book,
                groups,
                entries,
                width,
            },
            &[sel, book],
        ))
    }

    /// Additive-angular-margin logits from a `[N, C]` cosine matrix:
    /// `scale · cos(θ + margin)` at each row's label, `scale · cos θ` elsewhere.
    pub fn aam_logits(&mut self, cos: Var, labels: &[usize], margin: T, scale: T) -> Result<Var> {
        let cv = self.value(cos);
        if cv.shape().len() != 2 || cv.rows() != labels.len() {
            return Err(shape_err("aam_logits", format!("{:?} for {} labels", cv.shape(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= cv.cols()) {
            return Err(domain(format!("label {bad} out of range for {} classes", cv.cols())));
        }
        let (cm, sm) = (margin.cos(), margin.sin());
        let mut out = cv.map(|c| c * scale);
        for (r, &lab) in labels.iter().enumerate() {
            let c = cv.row(r)[lab].max(-T::one()).min(T::one());
            let sin_theta = (T::one() - c * c).max(T::zero()).sqrt();
            out.row_mut(r)[lab] = scale * (c * cm - sin_theta * sm);
        }
        Ok(self.push(
            out,
            Op::AamLogits {
                cos,
                labels: labels.to_vec(),
                margin,
                scale,
            },
            &[cos],
        ))
    }
}
