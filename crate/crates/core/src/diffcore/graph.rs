//! Tape of recorded operations and reverse-mode gradient propagation.
//!
//! A [`Graph`] is built fresh for every forward pass. Each operation pushes a
//! node holding its output value and whatever it needs for the backward pass;
//! [`Graph::backward`] then walks the tape in reverse.

use crate::error::{shape_err, Error, Result};
use crate::scalar::Real;
use crate::special::trigamma_unchecked;

use super::tensor::Tensor;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
pub(crate) enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    /// Adds (or multiplies by) a constant that is folded into the value.
    AddConst(Var),
    MulConst(Var, Tensor<T>),
    LeakyRelu(Var, T),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Tensor<T>,
        inv_std: Vec<T>,
        batch_stats: bool,
    },
    Softmax(Var),
    LogSoftmax(Var),
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Tensor<T>,
    },
    Concat(Var, Var),
    Reshape(Var),
    Transpose(Var),
    L2Normalize {
        x: Var,
        norms: Vec<T>,
    },
    PairwiseDistance(Var),
    StraightThrough(Var),
    GradScale(Var, T),
    Gather {
        x: Var,
        idx: Vec<usize>,
    },
    SumRows(Var),
    MeanOverBatch(Var),
    Sum(Var),
    Mean(Var),
    Log(Var),
    Digamma(Var),
    XLogX(Var),
    ColumnMinus {
        col: Var,
        m: Var,
    },
    CodebookLookup {
        sel: Var,
        book: Var,
        groups: usize,
        entries: usize,
        width: usize,
    },
    AamLogits {
        cos: Var,
        labels: Vec<usize>,
        margin: T,
        scale: T,
    },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Recorded computation.
#[derive(Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar with respect to every leaf that requires them.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient for a leaf; `None` when the leaf does not require gradients or
    /// the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf that receives gradients.
    pub fn variable(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    /// Leaf that never receives gradients.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub(crate) fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Reverse-mode pass from a one-element `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients<T>> {
        let root_value = &self.nodes[root.0].value;
        if root_value.len() != 1 {
            return Err(shape_err(
                "backward",
                format!("root must hold one value, has shape {:?}", root_value.shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor<T>>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[root.0] = Some(Tensor::full(root_value.shape(), T::one()));

        for i in (0..=root.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                grads[i] = None;
                continue;
            }
            let Some(g) = grads[i].take() else {
                continue;
            };
            if let Op::Leaf = node.op {
                grads[i] = Some(g);
                continue;
            }
            self.backward_node(i, g, &mut grads)?;
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn backward_node(&self, i: usize, g: Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let (n, k) = (av.shape()[0], av.shape()[1]);
                let m = bv.shape()[1];
                if self.wants(*a) {
                    // dA = G B^T
                    let mut da = vec![T::zero(); n * k];
                    T::gemm(
                        n,
                        m,
                        k,
                        T::one(),
                        g.data(),
                        (m as isize, 1),
                        bv.data(),
                        (1, m as isize),
                        T::zero(),
                        &mut da,
                        (k as isize, 1),
                    );
                    self.accumulate(grads, *a, Tensor::new(&[n, k], da)?);
                }
                if self.wants(*b) {
                    // dB = A^T G
                    let mut db = vec![T::zero(); k * m];
                    T::gemm(
                        k,
                        n,
                        m,
                        T::one(),
                        av.data(),
                        (1, k as isize),
                        g.data(),
                        (m as isize, 1),
                        T::zero(),
                        &mut db,
                        (m as isize, 1),
                    );
                    self.accumulate(grads, *b, Tensor::new(&[k, m], db)?);
                }
            }
            Op::AddBias(x, b) => {
                if self.wants(*b) {
                    let cols = g.cols();
                    let mut db = vec![T::zero(); cols];
                    for row in g.iter_rows() {
                        for (acc, &v) in db.iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                    self.accumulate(grads, *b, Tensor::new(self.shape(*b), db)?);
                }
                self.accumulate(grads, *x, g);
            }
            Op::Add(a, b) => {
                if self.wants(*a) {
                    self.accumulate(grads, *a, g.clone());
                }
                self.accumulate(grads, *b, g);
            }
            Op::Sub(a, b) => {
                if self.wants(*b) {
                    self.accumulate(grads, *b, g.map(|v| -v));
                }
                self.accumulate(grads, *a, g);
            }
            Op::Mul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                if self.wants(*a) {
                    self.accumulate(grads, *a, g.zip_map(bv, |gv, y| gv * y));
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, g.zip_map(av, |gv, x| gv * x));
                }
            }
            Op::Scale(x, c) => {
                let c = *c;
                self.accumulate(grads, *x, g.map(|v| v * c));
            }
            Op::AddConst(x) | Op::StraightThrough(x) => {
                let shape = self.shape(*x).to_vec();
                self.accumulate(grads, *x, g.reshape(&shape)?);
            }
            Op::Reshape(x) => {
                let shape = self.shape(*x).to_vec();
                self.accumulate(grads, *x, g.reshape(&shape)?);
            }
            Op::Transpose(x) => {
                self.accumulate(grads, *x, g.transpose()?);
            }
            Op::MulConst(x, c) => {
                self.accumulate(grads, *x, g.zip_map(c, |gv, cv| gv * cv));
            }
            Op::GradScale(x, c) => {
                let c = *c;
                self.accumulate(grads, *x, g.map(|v| v * c));
            }
            Op::LeakyRelu(x, slope) => {
                let slope = *slope;
                let xv = self.value(*x);
                let dx = g.zip_map(xv, |gv, v| if v > T::zero() { gv } else { gv * slope });
                self.accumulate(grads, *x, dx);
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_stats,
            } => {
                let n = g.rows();
                let c = g.cols();
                let gam = self.value(*gamma).data();
                if self.wants(*beta) || self.wants(*gamma) {
                    let mut dgamma = vec![T::zero(); c];
                    let mut dbeta = vec![T::zero(); c];
                    for r in 0..n {
                        let gr = g.row(r);
                        let xr = xhat.row(r);
                        for j in 0..c {
                            dgamma[j] += gr[j] * xr[j];
                            dbeta[j] += gr[j];
                        }
                    }
                    self.accumulate(grads, *gamma, Tensor::vector(dgamma));
                    self.accumulate(grads, *beta, Tensor::vector(dbeta));
                }
                if self.wants(*x) {
                    let mut dx = Tensor::zeros(&[n, c]);
                    if *batch_stats {
                        let nf = T::from_count(n);
                        let mut sum_dxh = vec![T::zero(); c];
                        let mut sum_dxh_xh = vec![T::zero(); c];
                        for r in 0..n {
                            let gr = g.row(r);
                            let xr = xhat.row(r);
                            for j in 0..c {
                                let dxh = gr[j] * gam[j];
                                sum_dxh[j] += dxh;
                                sum_dxh_xh[j] += dxh * xr[j];
                            }
                        }
                        for r in 0..n {
                            let gr = g.row(r);
                            let xr = xhat.row(r);
                            let out = dx.row_mut(r);
                            for j in 0..c {
                                let dxh = gr[j] * gam[j];
                                out[j] = inv_std[j] / nf * (nf * dxh - sum_dxh[j] - xr[j] * sum_dxh_xh[j]);
                            }
                        }
                    } else {
                        for r in 0..n {
                            let gr = g.row(r);
                            let out = dx.row_mut(r);
                            for j in 0..c {
                                out[j] = gr[j] * gam[j] * inv_std[j];
                            }
                        }
                    }
                    self.accumulate(grads, *x, dx);
                }
            }
            Op::Softmax(x) => {
                let y = &node.value;
                let mut dx = Tensor::zeros(y.shape());
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = g.row(r);
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    for ((o, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o = yv * (gv - dot);
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::LogSoftmax(x) => {
                let y = &node.value;
                let mut dx = Tensor::zeros(y.shape());
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = g.row(r);
                    let gsum: T = gr.iter().copied().sum();
                    for ((o, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o = gv - yv.exp() * gsum;
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::CrossEntropy { logits, labels, probs } => {
                let scale = g.item() / T::from_count(labels.len());
                let mut dx = probs.clone();
                for (r, &lab) in labels.iter().enumerate() {
                    dx.row_mut(r)[lab] -= T::one();
                }
                for v in dx.data_mut() {
                    *v *= scale;
                }
                self.accumulate(grads, *logits, dx);
            }
            Op::Concat(a, b) => {
                let ca = self.value(*a).cols();
                let cb = self.value(*b).cols();
                let rows = g.rows();
                let mut ga = Vec::with_capacity(rows * ca);
                let mut gb = Vec::with_capacity(rows * cb);
                for r in 0..rows {
                    let gr = g.row(r);
                    ga.extend_from_slice(&gr[..ca]);
                    gb.extend_from_slice(&gr[ca..]);
                }
                if self.wants(*a) {
                    self.accumulate(grads, *a, Tensor::new(self.shape(*a), ga)?);
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, Tensor::new(self.shape(*b), gb)?);
                }
            }
            Op::L2Normalize { x, norms } => {
                let y = &node.value;
                let mut dx = Tensor::zeros(y.shape());
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let gr = g.row(r);
                    let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    let inv = norms[r].recip();
                    for ((o, &yv), &gv) in dx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o = (gv - yv * dot) * inv;
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::PairwiseDistance(x) => {
                let xv = self.value(*x);
                let n = xv.rows();
                let d = xv.cols();
                let dist = &node.value;
                let mut dx = vec![T::zero(); n * d];
                for i in 0..n {
                    let xi = xv.row(i);
                    for j in 0..n {
                        let dij = dist.data()[i * n + j];
                        let gij = g.data()[i * n + j];
                        if dij <= T::zero() || gij == T::zero() {
                            continue;
                        }
                        let c = gij / dij;
                        let xj = xv.row(j);
                        for k in 0..d {
                            let diff = c * (xi[k] - xj[k]);
                            dx[i * d + k] += diff;
                            dx[j * d + k] -= diff;
                        }
                    }
                }
                self.accumulate(grads, *x, Tensor::new(xv.shape(), dx)?);
            }
            Op::Gather { x, idx } => {
                let shape = self.shape(*x).to_vec();
                let mut dx = Tensor::zeros(&shape);
                for (r, &j) in idx.iter().enumerate() {
                    dx.row_mut(r)[j] += g.data()[r];
                }
                self.accumulate(grads, *x, dx);
            }
            Op::SumRows(x) => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut dx = Vec::with_capacity(xv.len());
                for &gv in g.data() {
                    dx.extend(std::iter::repeat(gv).take(c));
                }
                self.accumulate(grads, *x, Tensor::new(xv.shape(), dx)?);
            }
            Op::MeanOverBatch(x) => {
                let xv = self.value(*x);
                let n = xv.shape()[0];
                let inv = T::from_count(n).recip();
                let mut dx = Vec::with_capacity(xv.len());
                for _ in 0..n {
                    dx.extend(g.data().iter().map(|&v| v * inv));
                }
                self.accumulate(grads, *x, Tensor::new(xv.shape(), dx)?);
            }
            Op::Sum(x) => {
                let gv = g.item();
                self.accumulate(grads, *x, Tensor::full(self.shape(*x), gv));
            }
            Op::Mean(x) => {
                let n = self.value(*x).len();
                let gv = g.item() / T::from_count(n);
                self.accumulate(grads, *x, Tensor::full(self.shape(*x), gv));
            }
            Op::Log(x) => {
                let dx = g.zip_map(self.value(*x), |gv, v| gv / v);
                self.accumulate(grads, *x, dx);
            }
            Op::Digamma(x) => {
                let dx = g.zip_map(self.value(*x), |gv, v| gv * trigamma_unchecked(v));
                self.accumulate(grads, *x, dx);
            }
            Op::XLogX(x) => {
                let tiny = T::min_positive_value();
                let dx = g.zip_map(self.value(*x), |gv, v| gv * (v.max(tiny).ln() + T::one()));
                self.accumulate(grads, *x, dx);
            }
            Op::ColumnMinus { col, m } => {
                let rows = g.rows();
                if self.wants(*col) {
                    let dcol: Vec<T> = (0..rows).map(|r| g.row(r).iter().copied().sum()).collect();
                    self.accumulate(grads, *col, Tensor::new(self.shape(*col), dcol)?);
                }
                if self.wants(*m) {
                    self.accumulate(grads, *m, g.map(|v| -v));
                }
            }
            Op::CodebookLookup {
                sel,
                book,
                groups,
                entries,
                width,
            } => {
                let (gcount, v, w) = (*groups, *entries, *width);
                let selv = self.value(*sel);
                let bookv = self.value(*book);
                let n = selv.len() / (gcount * v);
                let gw = gcount * w;
                let gv = gcount * v;
                if self.wants(*sel) {
                    let mut dsel = vec![T::zero(); n * gv];
                    for grp in 0..gcount {
                        // dsel[:, grp, :] = dout[:, grp, :] * book[grp]^T
                        T::gemm(
                            n,
                            w,
                            v,
                            T::one(),
                            &g.data()[grp * w..],
                            (gw as isize, 1),
                            &bookv.data()[grp * v * w..],
                            (1, w as isize),
                            T::zero(),
                            &mut dsel[grp * v..],
                            (gv as isize, 1),
                        );
                    }
                    self.accumulate(grads, *sel, Tensor::new(selv.shape(), dsel)?);
                }
                if self.wants(*book) {
                    let mut dbook = vec![T::zero(); gcount * v * w];
                    for grp in 0..gcount {
                        // dbook[grp] = sel[:, grp, :]^T * dout[:, grp, :]
                        T::gemm(
                            v,
                            n,
                            w,
                            T::one(),
                            &selv.data()[grp * v..],
                            (1, gv as isize),
                            &g.data()[grp * w..],
                            (gw as isize, 1),
                            T::zero(),
                            &mut dbook[grp * v * w..],
                            (w as isize, 1),
                        );
                    }
                    self.accumulate(grads, *book, Tensor::new(bookv.shape(), dbook)?);
                }
            }
            Op::AamLogits {
                cos,
                labels,
                margin,
                scale,
            } => {
                let cv = self.value(*cos);
                let (cm, sm) = (margin.cos(), margin.sin());
                let floor = T::lit(1e-12);
                let mut dx = g.map(|v| v * *scale);
                for (r, &lab) in labels.iter().enumerate() {
                    let c = cv.row(r)[lab];
                    let sin_theta = (T::one() - c * c).max(floor).sqrt();
                    // d/dc cos(acos(c) + m) = cos m + sin m * c / sin θ
                    let deriv = cm + sm * c / sin_theta;
                    dx.row_mut(r)[lab] = g.row(r)[lab] * *scale * deriv;
                }
                self.accumulate(grads, *cos, dx);
            }
        }
        Ok(())
    }
}

pub(crate) fn check_same_shape<T: Real>(g: &Graph<T>, op: &'static str, a: Var, b: Var) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(shape_err(op, format!("{:?} vs {:?}", g.shape(a), g.shape(b))));
    }
    Ok(())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
