//! Differentiable binarization and its training losses.
//!
//! The approximate step function is `B = sigmoid(k (P - T))` with
//! amplification factor `k`. Treating `x = P - T`, the per-pixel losses
//! are `l_pos = -log B` and `l_neg = -log (1 - B)`, with closed-form
//! derivatives
//! `dl_pos/dx = -k sigmoid(-k x)` and `dl_neg/dx = k sigmoid(k x)`.
//! Everything is evaluated through numerically stable sigmoid/softplus
//! forms so the saturated tails (|k x| up to several hundred) neither
//! overflow nor lose the gradient sign.

use crate::error::{Error, Result};
use crate::labelgen::LabelSet;
use crate::maps::{BinaryMap, FloatMap};

/// Probability clamp for binary cross-entropy.
pub const BCE_EPS: f64 = 1e-7;

/// Cap on mined negatives when an image has no positives.
pub const NEG_CAP_WITHOUT_POSITIVES: usize = 10_000;

/// Parameters of the binarization head and its loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DbParams {
    /// Amplification factor of the approximate step.
    pub k: f64,
    /// Weight of the binary-map loss term.
    pub alpha: f64,
    /// Weight of the threshold-map loss term.
    pub beta: f64,
    /// Mined negatives per positive.
    pub neg_ratio: f64,
    /// Fixed binarization threshold used at inference.
    pub const_thresh: f64,
}

impl Default for DbParams {
    fn default() -> Self {
        DbParams {
            k: 50.0,
            alpha: 1.0,
            beta: 10.0,
            neg_ratio: 3.0,
            const_thresh: 0.2,
        }
    }
}

impl DbParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be non-negative, got {}",
                self.beta
            )));
        }
        if !(self.neg_ratio > 0.0 && self.neg_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "neg_ratio must be positive, got {}",
                self.neg_ratio
            )));
        }
        if !(self.const_thresh > 0.0 && self.const_thresh < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "const_thresh must lie in (0, 1), got {}",
                self.const_thresh
            )));
        }
        Ok(())
    }
}

/// Loss breakdown for one image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossReport {
    /// Probability-map BCE with hard-negative mining.
    pub l_s: f64,
    /// Approximate-binary-map BCE with hard-negative mining.
    pub l_b: f64,
    /// Threshold-map masked L1.
    pub l_t: f64,
    /// `l_s + alpha * l_b + beta * l_t`.
    pub total: f64,
    /// Positive pixels inside the train mask.
    pub positives: usize,
    /// Negatives actually sampled by mining.
    pub sampled_negatives: usize,
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Positive-label pixel loss `-log sigmoid(k x)` at `x = P - T`.
pub fn pos_loss(x: f64, k: f64) -> f64 {
    softplus(-k * x)
}

/// Negative-label pixel loss `-log (1 - sigmoid(k x))`.
pub fn neg_loss(x: f64, k: f64) -> f64 {
    softplus(k * x)
}

/// Analytic derivatives `(dl_pos/dx, dl_neg/dx)` of the two pixel losses.
pub fn db_loss_grads(x: f64, k: f64) -> (f64, f64) {
    (-k * sigmoid(-k * x), k * sigmoid(k * x))
}

/// Elementwise `sigmoid(k (P - T))`.
pub fn db_map(prob: &FloatMap, thresh: &FloatMap, k: f64) -> Result<FloatMap> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if prob.dims() != thresh.dims() {
        return Err(Error::DimensionMismatch {
            expected: prob.dims(),
            got: thresh.dims(),
        });
    }
    let data = prob
        .data()
        .iter()
        .zip(thresh.data())
        .map(|(&p, &t)| sigmoid(k * (p as f64 - t as f64)) as f32)
        .collect();
    FloatMap::from_vec(prob.height(), prob.width(), data)
}

/// Hard threshold: set iff `P >= t`.
pub fn standard_binarize(prob: &FloatMap, t: f64) -> Result<BinaryMap> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "binarization threshold must lie in (0, 1), got {t}"
        )));
    }
    let data = prob.data().iter().map(|&p| p as f64 >= t).collect();
    BinaryMap::from_vec(prob.height(), prob.width(), data)
}

/// Compare the analytic loss gradients against central differences of the
/// loss values over `xs`. Returns the maximum relative error, skipping
/// points where the analytic gradient magnitude is below `1e-6`.
pub fn finite_diff_check(k: f64, xs: &[f64], h: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if !(h > 1e-8 && h < 1e-2) {
        return Err(Error::InvalidParameter(format!(
            "step size must lie in (1e-8, 1e-2), got {h}"
        )));
    }
    let mut worst: f64 = 0.0;
    for &x in xs {
        let (gp, gn) = db_loss_grads(x, k);
        let fd_p = (pos_loss(x + h, k) - pos_loss(x - h, k)) / (2.0 * h);
        let fd_n = (neg_loss(x + h, k) - neg_loss(x - h, k)) / (2.0 * h);
        if gp.abs() > 1e-6 {
            worst = worst.max((fd_p - gp).abs() / gp.abs());
        }
        if gn.abs() > 1e-6 {
            worst = worst.max((fd_n - gn).abs() / gn.abs());
        }
    }
    Ok(worst)
}

/// Indices of the mined hard negatives: the `ceil(neg_ratio * positives)`
/// unset-label pixels of highest predicted value inside the mask, ties
/// broken toward the lower linear index. With no positives, the
/// `min(negatives, 10000)` hardest are taken.
pub fn mine_hard_negatives(
    pred: &FloatMap,
    label: &BinaryMap,
    mask: &BinaryMap,
    neg_ratio: f64,
) -> Result<Vec<usize>> {
    check_triple(pred, label, mask)?;
    if !(neg_ratio > 0.0 && neg_ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "neg_ratio must be positive, got {neg_ratio}"
        )));
    }
    let mut positives = 0usize;
    let mut negatives: Vec<(f32, usize)> = Vec::new();
    for (i, ((&p, &l), &m)) in pred
        .data()
        .iter()
        .zip(label.data())
        .zip(mask.data())
        .enumerate()
    {
        if !m {
            continue;
        }
        if l {
            positives += 1;
        } else {
            negatives.push((p, i));
        }
    }
    let want = if positives == 0 {
        negatives.len().min(NEG_CAP_WITHOUT_POSITIVES)
    } else {
        ((neg_ratio * positives as f64).ceil() as usize).min(negatives.len())
    };
    negatives.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    negatives.truncate(want);
    Ok(negatives.into_iter().map(|(_, i)| i).collect())
}

/// Binary cross-entropy over the positives plus mined hard negatives.
/// Returns 0 when the selection is empty. Predictions are clamped to
/// `[1e-7, 1 - 1e-7]` before the logs.
pub fn bce_hard_neg(
    pred: &FloatMap,
    label: &BinaryMap,
    mask: &BinaryMap,
    neg_ratio: f64,
) -> Result<f64> {
    let mined = mine_hard_negatives(pred, label, mask, neg_ratio)?;
    let mut acc = 0.0f64;
    let mut count = 0usize;
    for (i, (&l, &m)) in label.data().iter().zip(mask.data()).enumerate() {
        if m && l {
            acc += -clamped(pred.data()[i]).ln();
            count += 1;
        }
    }
    for &i in &mined {
        acc += -(1.0 - clamped(pred.data()[i])).ln();
        count += 1;
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(acc / count as f64)
}

fn clamped(p: f32) -> f64 {
    (p as f64).clamp(BCE_EPS, 1.0 - BCE_EPS)
}

/// Mean absolute error over the band mask; 0 when the mask is empty.
pub fn threshold_loss(pred: &FloatMap, label: &FloatMap, band_mask: &BinaryMap) -> Result<f64> {
    if pred.dims() != label.dims() {
        return Err(Error::DimensionMismatch {
            expected: pred.dims(),
            got: label.dims(),
        });
    }
    if pred.dims() != band_mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: pred.dims(),
            got: band_mask.dims(),
        });
    }
    let mut acc = 0.0f64;
    let mut count = 0usize;
    for ((&p, &l), &m) in pred.data().iter().zip(label.data()).zip(band_mask.data()) {
        if m {
            acc += (p as f64 - l as f64).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(acc / count as f64)
}

/// Full training loss of one image:
/// `L = L_s + alpha * L_b + beta * L_t`, each term a mean.
pub fn total_loss(
    prob_pred: &FloatMap,
    thresh_pred: &FloatMap,
    binary_pred: &FloatMap,
    labels: &LabelSet,
    params: &DbParams,
) -> Result<LossReport> {
    params.validate()?;
    let l_s = bce_hard_neg(prob_pred, &labels.prob_label, &labels.train_mask, params.neg_ratio)?;
    let l_b = bce_hard_neg(
        binary_pred,
        &labels.prob_label,
        &labels.train_mask,
        params.neg_ratio,
    )?;
    let l_t = threshold_loss(thresh_pred, &labels.thresh_label, &labels.band_mask)?;
    let mined = mine_hard_negatives(
        prob_pred,
        &labels.prob_label,
        &labels.train_mask,
        params.neg_ratio,
    )?;
    let positives = labels
        .prob_label
        .data()
        .iter()
        .zip(labels.train_mask.data())
        .filter(|(&l, &m)| l && m)
        .count();
    Ok(LossReport {
        l_s,
        l_b,
        l_t,
        total: l_s + params.alpha * l_b + params.beta * l_t,
        positives,
        sampled_negatives: mined.len(),
    })
}

fn check_triple(pred: &FloatMap, label: &BinaryMap, mask: &BinaryMap) -> Result<()> {
    if pred.dims() != label.dims() {
        return Err(Error::DimensionMismatch {
            expected: pred.dims(),
            got: label.dims(),
        });
    }
    if pred.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: pred.dims(),
            got: mask.dims(),
        });
    }
    Ok(())
}
