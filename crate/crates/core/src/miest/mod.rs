//! k-nearest-neighbour mutual-information and entropy estimators.
//!
//! Plain estimators live here; [`loss`] rebuilds the same arithmetic on a
//! [`Graph`](crate::diffcore::Graph) with straight-through selection and
//! counting, so both paths return bit-identical values.

pub mod loss;
pub mod oracle;

use crate::diffcore::{l2_distance, Tensor};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Real;
use crate::special::{digamma_unchecked, ln_unit_ball_volume};

pub use crate::special::digamma;
pub use loss::{mi_continuous_loss, mi_discrete_loss};

/// Volume of the unit l2-ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitBallVolume {
    pub dim: usize,
    pub volume: f64,
}

impl UnitBallVolume {
    pub fn new(dim: usize) -> Self {
        UnitBallVolume {
            dim,
            volume: ln_unit_ball_volume(dim).exp(),
        }
    }

    pub fn ln(&self) -> f64 {
        ln_unit_ball_volume(self.dim)
    }
}

/// Second variable of an [`MiBatch`].
#[derive(Clone, Debug)]
pub enum Target<T> {
    Discrete(Vec<usize>),
    /// `[N, d_Y]` continuous observations.
    Continuous(Tensor<T>),
}

/// Paired observations `(z_i, y_i)` and the neighbour count `k`.
#[derive(Clone, Debug)]
pub struct MiBatch<T> {
    pub z: Tensor<T>,
    pub y: Target<T>,
    pub k: usize,
}

impl<T: Real> MiBatch<T> {
    pub fn new(z: Tensor<T>, y: Target<T>, k: usize) -> Result<Self> {
        let n = check_rows(&z, k)?;
        let m = match &y {
            Target::Discrete(l) => l.len(),
            Target::Continuous(t) => t.rows(),
        };
        if m != n {
            return Err(shape_err("MiBatch", format!("{n} observations of Z, {m} of Y")));
        }
        Ok(MiBatch { z, y, k })
    }

    /// Î(Z, Y) in nats.
    pub fn estimate(&self) -> Result<T> {
        match &self.y {
            Target::Discrete(l) => mi_discrete(&self.z, l, self.k),
            Target::Continuous(y) => mi_continuous(&self.z, y, self.k),
        }
    }
}

fn check_rows<T: Real>(z: &Tensor<T>, k: usize) -> Result<usize> {
    if z.shape().len() != 2 {
        return Err(shape_err("mi", format!("Z must be [N, d], got {:?}", z.shape())));
    }
    let n = z.rows();
    if k == 0 || n <= k {
        return Err(Error::Estimation(format!("need N > k >= 1, got N = {n}, k = {k}")));
    }
    Ok(n)
}

/// Per-sample class sizes, the inclusion mask and the number of included samples.
pub(crate) struct DiscretePlan<T> {
    pub class_size: Vec<usize>,
    pub mask: Vec<T>,
    pub included: usize,
}

pub(crate) fn discrete_plan<T: Real>(labels: &[usize], k: usize) -> Result<DiscretePlan<T>> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; classes];
    for &l in labels {
        sizes[l] += 1;
    }
    let small: Vec<usize> = (0..classes).filter(|&c| sizes[c] > 0 && sizes[c] <= k).collect();
    let class_size: Vec<usize> = labels.iter().map(|&l| sizes[l]).collect();
    let mask: Vec<T> = class_size
        .iter()
        .map(|&s| if s > k { T::one() } else { T::zero() })
        .collect();
    let included = class_size.iter().filter(|&&s| s > k).count();
    if included == 0 {
        return Err(Error::Estimation(format!(
            "every class has at most k = {k} members: classes {small:?}"
        )));
    }
    if !small.is_empty() {
        log::warn!("classes {small:?} have at most k = {k} members; their samples are dropped");
    }
    Ok(DiscretePlan {
        class_size,
        mask,
        included,
    })
}

/// A constant label carries no information; the estimate is defined as 0.
pub(crate) fn single_class(labels: &[usize]) -> bool {
    labels.windows(2).all(|w| w[0] == w[1])
}

fn kth_smallest<T: Real>(buf: &mut [T], k: usize) -> T {
    let (_, v, _) = buf.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    *v
}

/// Continuous–discrete estimate
/// `ψ(N) + ψ(k) − ⟨ψ(N_y)⟩ − ⟨ψ(n_z)⟩`.
///
/// The k-th neighbour is searched among same-label samples, `n_z` counts the
/// whole batch within that distance. Both exclude the query itself. Samples
/// of classes with at most `k` members are left out of the average. A batch
/// with a single label returns exactly 0.
pub fn mi_discrete<T: Real>(z: &Tensor<T>, labels: &[usize], k: usize) -> Result<T> {
    let n = check_rows(z, k)?;
    if labels.len() != n {
        return Err(shape_err("mi_discrete", format!("{n} rows, {} labels", labels.len())));
    }
    if single_class(labels) {
        return Ok(T::zero());
    }
    let plan = discrete_plan::<T>(labels, k)?;
    let psi_n = digamma_unchecked(T::from_count(n));
    let psi_k = digamma_unchecked(T::from_count(k));

    let mut dist = vec![T::zero(); n];
    let mut same = Vec::with_capacity(n);
    let mut masked = Vec::with_capacity(n);
    for i in 0..n {
        let zi = z.row(i);
        same.clear();
        for j in 0..n {
            dist[j] = l2_distance(zi, z.row(j));
            if j != i && labels[j] == labels[i] {
                same.push(dist[j]);
            }
        }
        let kth = if same.len() >= k {
            kth_smallest(&mut same, k)
        } else {
            T::infinity()
        };
        let count = (0..n).filter(|&j| j != i && kth - dist[j] >= T::zero()).count();
        let a = psi_n - digamma_unchecked(T::from_count(plan.class_size[i]));
        let b = -digamma_unchecked(T::from_count(count)) + psi_k;
        masked.push((b + a) * plan.mask[i]);
    }
    let total: T = masked.iter().copied().sum();
    Ok(total * T::from_count(plan.included).recip())
}

/// The constant `ln N + ψ(k) + ln(v_{d_Z} v_{d_Y} / v_{d_Z + d_Y})`.
pub(crate) fn continuous_offset<T: Real>(n: usize, k: usize, dz: usize, dy: usize) -> T {
    let c = (n as f64).ln()
        + digamma_unchecked(k as f64)
        + ln_unit_ball_volume(dz)
        + ln_unit_ball_volume(dy)
        - ln_unit_ball_volume(dz + dy);
    T::lit(c)
}

pub(crate) fn as_matrix<T: Real>(y: &Tensor<T>) -> Result<Tensor<T>> {
    match y.shape().len() {
        1 => y.clone().reshape(&[y.len(), 1]),
        2 => Ok(y.clone()),
        _ => Err(shape_err("mi_continuous", format!("Y must be [N] or [N, d], got {:?}", y.shape()))),
    }
}

/// Continuous–continuous estimate
/// `ln N + ψ(k) + ln(v_{d_Z} v_{d_Y} / v_{d_Z + d_Y}) − ⟨ln n_z + ln n_y⟩`.
///
/// The k-th neighbour distance is taken in the joint `(Z, Y)` space under the
/// l2 norm and reused as the radius for both marginal counts.
pub fn mi_continuous<T: Real>(z: &Tensor<T>, y: &Tensor<T>, k: usize) -> Result<T> {
    let n = check_rows(z, k)?;
    let y = as_matrix(y)?;
    if y.rows() != n {
        return Err(shape_err("mi_continuous", format!("{n} rows of Z, {} of Y", y.rows())));
    }
    let (dz, dy) = (z.cols(), y.cols());
    let joint: Vec<Vec<T>> = (0..n).map(|i| [z.row(i), y.row(i)].concat()).collect();

    let mut buf = Vec::with_capacity(n);
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        buf.clear();
        buf.extend((0..n).filter(|&j| j != i).map(|j| l2_distance(&joint[i], &joint[j])));
        let rho = kth_smallest(&mut buf, k);
        let mut nz = 0usize;
        let mut ny = 0usize;
        for j in (0..n).filter(|&j| j != i) {
            if rho - l2_distance(z.row(i), z.row(j)) >= T::zero() {
                nz += 1;
            }
            if rho - l2_distance(y.row(i), y.row(j)) >= T::zero() {
                ny += 1;
            }
        }
        terms.push(T::from_count(nz).ln() + T::from_count(ny).ln());
    }
    let mean = terms.iter().copied().sum::<T>() / T::from_count(n);
    Ok(-mean + continuous_offset::<T>(n, k, dz, dy))
}

/// Kozachenko–Leonenko differential entropy in nats,
/// `ψ(N) − ψ(k) + ln v_d + (d/N) Σ ln ε_i` with `ε_i` the l2 distance from
/// sample `i` to its k-th neighbour (the radius of the ball of volume `v_d ε_i^d`).
pub fn kl_entropy<T: Real>(z: &Tensor<T>, k: usize) -> Result<T> {
    let n = check_rows(z, k)?;
    let d = z.cols();
    let mut buf = Vec::with_capacity(n);
    let mut sum_log = 0.0f64;
    for i in 0..n {
        buf.clear();
        buf.extend((0..n).filter(|&j| j != i).map(|j| l2_distance(z.row(i), z.row(j))));
        let eps = kth_smallest(&mut buf, k);
        if !(eps > T::zero()) {
            return Err(Error::Estimation(format!(
                "sample {i} has {k} or more duplicates; the k-th neighbour distance is 0"
            )));
        }
        sum_log += eps.as_f64().ln();
    }
    let h = digamma_unchecked(n as f64) - digamma_unchecked(k as f64)
        + ln_unit_ball_volume(d)
        + d as f64 / n as f64 * sum_log;
    Ok(T::lit(h))
}
