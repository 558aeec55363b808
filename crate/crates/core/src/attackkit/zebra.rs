//! Oracle-calibrated privacy disclosure: pool-adjacent-violators calibration
//! of detection scores to log-likelihood ratios, then the expected (D_ECE)
//! and worst-case (llr_max) disclosure, both in bits.

use serde::{Deserialize, Serialize};

use super::metrics::ScoreSet;
use crate::error::{Error, Result};

/// Prior log-odds grid: 201 points over `[−10, 10]`.
pub const PRIOR_GRID_POINTS: usize = 201;
pub const PRIOR_GRID_BOUND: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zebra {
    pub d_ece: f64,
    pub llr_max: f64,
}

/// Isotonic (non-decreasing) weighted least-squares fit of `values`.
/// Entries never pooled keep their input value exactly.
pub fn pav(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // (mean, weight, members)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().expect("two blocks") = ((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, n1 + n2);
        }
    }
    blocks.into_iter().flat_map(|(m, _, n)| std::iter::repeat(m).take(n)).collect()
}

/// Calibrated natural-log LLR per input score.
///
/// Tied scores form one group, so they always share an LLR. A pseudo-group
/// of weight 2 at the empirical positive rate sits below and above every
/// score (a Laplace-style correction), which keeps the LLRs finite and
/// leaves the prior unchanged. Scores carrying no information calibrate to
/// exactly 0.
pub fn calibrate(s: &ScoreSet) -> Result<Vec<f64>> {
    let (pos, neg) = s.counts();
    if pos == 0 || neg == 0 {
        return Err(Error::Data(format!("calibration needs both classes ({pos}/{neg})")));
    }
    let base = pos as f64 / (pos + neg) as f64;
    let groups = s.grouped();
    let mut rate = Vec::with_capacity(groups.len() + 2);
    let mut weight = Vec::with_capacity(groups.len() + 2);
    rate.push(base);
    weight.push(2.0);
    for &(_, p, n) in &groups {
        rate.push(p as f64 / (p + n) as f64);
        weight.push((p + n) as f64);
    }
    rate.push(base);
    weight.push(2.0);
    let posterior = pav(&rate, &weight);
    let log_odds = |q: f64| q.ln() - (1.0 - q).ln();
    let prior_log_odds = log_odds(base);
    let group_llr: Vec<f64> = posterior[1..posterior.len() - 1]
        .iter()
        .map(|&q| log_odds(q) - prior_log_odds)
        .collect();
    let scores: Vec<f64> = groups.iter().map(|g| g.0).collect();
    Ok(s
        .scores
        .iter()
        .map(|x| {
            let i = scores.binary_search_by(|g| g.total_cmp(x)).expect("score is in its own grouping");
            group_llr[i]
        })
        .collect())
}

/// `log2(1 + e^x)` without overflow.
fn log2_1p_exp(x: f64) -> f64 {
    (x.max(0.0) + (-x.abs()).exp().ln_1p()) / std::f64::consts::LN_2
}

/// Expected cross-entropy (bits) of Bayes decisions from `llrs` at prior log-odds `plo`.
pub fn ece(llrs: &[f64], labels: &[bool], plo: f64) -> f64 {
    let p = 1.0 / (1.0 + (-plo).exp());
    let (mut tar, mut non, mut nt, mut nn) = (0.0, 0.0, 0usize, 0usize);
    for (&l, &is_tar) in llrs.iter().zip(labels) {
        if is_tar {
            tar += log2_1p_exp(-(l + plo));
            nt += 1;
        } else {
            non += log2_1p_exp(l + plo);
            nn += 1;
        }
    }
    p * tar / nt as f64 + (1.0 - p) * non / nn as f64
}

pub fn prior_grid() -> Vec<f64> {
    let step = 2.0 * PRIOR_GRID_BOUND / (PRIOR_GRID_POINTS - 1) as f64;
    (0..PRIOR_GRID_POINTS).map(|i| -PRIOR_GRID_BOUND + step * i as f64).collect()
}

pub fn zebra(s: &ScoreSet) -> Result<Zebra> {
    let llrs = calibrate(s)?;
    let zeros = vec![0.0; llrs.len()];
    let grid = prior_grid();
    let d_ece = grid
        .iter()
        .map(|&plo| (ece(&zeros, &s.labels, plo) - ece(&llrs, &s.labels, plo)).max(0.0))
        .sum::<f64>()
        / grid.len() as f64;
    let llr_max = llrs.iter().fold(0.0f64, |m, l| m.max(l.abs())) / std::f64::consts::LN_2;
    Ok(Zebra { d_ece, llr_max })
}
