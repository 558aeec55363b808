//! Classification, regression and detection metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detection scores with their positive/target flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Data(format!("{} scores for {} labels", scores.len(), labels.len())));
        }
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Data(format!("non-finite score {s}")));
        }
        Ok(ScoreSet { scores, labels })
    }

    pub fn from_classes(targets: &[f64], non_targets: &[f64]) -> Result<Self> {
        let scores = targets.iter().chain(non_targets).copied().collect();
        let labels = std::iter::repeat(true)
            .take(targets.len())
            .chain(std::iter::repeat(false).take(non_targets.len()))
            .collect();
        Self::new(scores, labels)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l).count();
        (pos, self.labels.len() - pos)
    }

    fn require_both(&self, what: &str) -> Result<(usize, usize)> {
        let (pos, neg) = self.counts();
        if pos == 0 || neg == 0 {
            return Err(Error::Data(format!("{what} needs both positive and negative examples ({pos}/{neg})")));
        }
        Ok((pos, neg))
    }

    /// Distinct scores in ascending order with `(positives, negatives)` at each.
    pub(crate) fn grouped(&self) -> Vec<(f64, usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.scores[a].total_cmp(&self.scores[b]));
        let mut out: Vec<(f64, usize, usize)> = Vec::new();
        for i in order {
            let s = self.scores[i];
            let (p, n) = (self.labels[i] as usize, !self.labels[i] as usize);
            match out.last_mut() {
                Some(last) if last.0 == s => {
                    last.1 += p;
                    last.2 += n;
                }
                _ => out.push((s, p, n)),
            }
        }
        out
    }

    /// `(P_miss, P_fa)` for the threshold "accept if score ≥ t", for `t` at
    /// every distinct score in ascending order and finally above all scores.
    pub(crate) fn operating_points(&self) -> Result<Vec<(f64, f64)>> {
        let (pos, neg) = self.require_both("detection metric")?;
        let groups = self.grouped();
        let mut points = Vec::with_capacity(groups.len() + 1);
        let (mut below_pos, mut below_neg) = (0usize, 0usize);
        for &(_, p, n) in &groups {
            points.push((below_pos as f64 / pos as f64, (neg - below_neg) as f64 / neg as f64));
            below_pos += p;
            below_neg += n;
        }
        points.push((1.0, 0.0));
        Ok(points)
    }
}

/// Mean of per-class recalls over the classes present in `labels`, in percent.
pub fn uar(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() || labels.is_empty() {
        return Err(Error::Data(format!("{} predictions for {} labels", predictions.len(), labels.len())));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut hit = vec![0usize; classes];
    let mut total = vec![0usize; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        total[l] += 1;
        hit[l] += (p == l) as usize;
    }
    let recalls: Vec<f64> = hit
        .iter()
        .zip(&total)
        .filter(|(_, &t)| t > 0)
        .map(|(&h, &t)| h as f64 / t as f64)
        .collect();
    Ok(100.0 * recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// Average precision with the positive class as relevant, in percent.
///
/// Sweeps distinct thresholds from the highest score down and sums
/// `(R_k − R_{k−1}) · P_k`; tied scores enter together.
pub fn auprc(s: &ScoreSet) -> Result<f64> {
    let (pos, _) = s.require_both("AUPRC")?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for &(_, p, n) in s.grouped().iter().rev() {
        tp += p;
        fp += n;
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(100.0 * ap)
}

fn moments(a: &[f64], b: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Data(format!("correlation needs two equal series of length ≥ 2, got {} and {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
        cov += (x - ma) * (y - mb);
    }
    Ok((ma, mb, va / n, vb / n, cov / n))
}

/// Concordance correlation coefficient. A constant prediction of a constant
/// target that it matches exactly scores 1.
pub fn ccc(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    let (mp, mt, vp, vt, cov) = moments(predictions, targets)?;
    let denom = vp + vt + (mp - mt) * (mp - mt);
    Ok(if denom == 0.0 { 1.0 } else { 2.0 * cov / denom })
}

/// Pearson correlation; 0 when either series is constant.
pub fn pcc(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    let (_, _, vp, vt, cov) = moments(predictions, targets)?;
    Ok(if vp == 0.0 || vt == 0.0 { 0.0 } else { cov / (vp * vt).sqrt() })
}

/// Equal error rate in percent.
///
/// Operating points at each distinct score form a staircase from
/// `(P_miss, P_fa) = (0, 1)` to `(1, 0)`; the EER is where the segment
/// joining the two points around `P_miss = P_fa` crosses the diagonal.
pub fn eer(s: &ScoreSet) -> Result<f64> {
    let points = s.operating_points()?;
    for w in points.windows(2) {
        let (m1, f1) = w[0];
        let (m2, f2) = w[1];
        let (d1, d2) = (m1 - f1, m2 - f2);
        if d1 <= 0.0 && d2 >= 0.0 {
            if d1 == d2 {
                return Ok(100.0 * m1);
            }
            let a = d1 / (d1 - d2);
            return Ok(100.0 * (m1 + a * (m2 - m1)));
        }
    }
    unreachable!("the sweep starts below the diagonal and ends above it")
}

/// Costs and prior of the detection cost function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcfParams {
    pub p_target: f64,
    pub c_miss: f64,
    pub c_fa: f64,
}

impl Default for DcfParams {
    fn default() -> Self {
        DcfParams {
            p_target: 0.01,
            c_miss: 1.0,
            c_fa: 1.0,
        }
    }
}

/// Minimum normalised detection cost over all thresholds.
pub fn min_dcf(s: &ScoreSet, params: DcfParams) -> Result<f64> {
    let DcfParams { p_target: p, c_miss, c_fa } = params;
    if !(p > 0.0 && p < 1.0 && c_miss > 0.0 && c_fa > 0.0) {
        return Err(Error::Config(format!("invalid detection cost parameters {params:?}")));
    }
    let norm = (c_miss * p).min(c_fa * (1.0 - p));
    let best = s
        .operating_points()?
        .into_iter()
        .map(|(m, f)| c_miss * m * p + c_fa * f * (1.0 - p))
        .fold(f64::INFINITY, f64::min);
    Ok(best / norm)
}
