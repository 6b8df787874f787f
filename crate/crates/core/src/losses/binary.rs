use crate::error::{Axis, Error, Result};
use crate::ops::sigmoid_scalar;
use crate::targets::EdgeMap;
use crate::tensor::Tensor;

/// Probability clamp used by every logarithm.
pub const PROB_EPSILON: f64 = 1e-7;
/// Added to every soft-IoU denominator.
pub const IOU_GUARD: f64 = 1e-12;

/// Clamped probability and whether the clamp was active.
#[inline]
pub(crate) fn clamped_sigmoid(z: f64) -> (f64, bool) {
    let p = sigmoid_scalar(z);
    if p < PROB_EPSILON {
        (PROB_EPSILON, true)
    } else if p > 1.0 - PROB_EPSILON {
        (1.0 - PROB_EPSILON, true)
    } else {
        (p, false)
    }
}

pub(crate) fn check_single_plane(t: &Tensor, width: usize, height: usize) -> Result<()> {
    let s = t.shape();
    Error::check(Axis::Batch, 1, s.n)?;
    Error::check(Axis::Channels, 1, s.c)?;
    Error::check(Axis::Height, height, s.h)?;
    Error::check(Axis::Width, width, s.w)
}

/// Class-balanced binary cross-entropy on edge logits.
///
/// `beta = |Y+| / |Y|` weights the positive pixels and `1 - beta` the
/// negatives. Probabilities are clamped to `[eps, 1 - eps]` and the gradient
/// vanishes where the clamp is active.
pub fn hed_loss(logits: &Tensor, edges: &EdgeMap) -> Result<(f64, Tensor)> {
    check_single_plane(logits, edges.width(), edges.height())?;
    let total = edges.mask().len();
    if total == 0 {
        return Err(Error::Degenerate("edge loss over an empty image".into()));
    }
    let beta = edges.count() as f64 / total as f64;
    let mut value = 0.0;
    let mut grad = Tensor::zeros(logits.shape());
    for ((&z, &pos), g) in logits.data().iter().zip(edges.mask()).zip(grad.data_mut()) {
        let (p, clamped) = clamped_sigmoid(z);
        if pos {
            value -= beta * p.ln();
            if !clamped {
                *g = -beta * (1.0 - p);
            }
        } else {
            value -= (1.0 - beta) * (1.0 - p).ln();
            if !clamped {
                *g = (1.0 - beta) * p;
            }
        }
    }
    Ok((value, grad))
}

/// `1 - sum(P Y) / (sum(P + Y - P Y) + guard)` for probabilities `P` and a
/// binary target `Y`, with its gradient in `P`.
pub fn soft_iou_loss(probs: &[f64], target: &[bool]) -> Result<(f64, Vec<f64>)> {
    Error::check(Axis::Length, target.len(), probs.len())?;
    let (mut inter, mut union) = (0.0, IOU_GUARD);
    for (&p, &y) in probs.iter().zip(target) {
        let y = y as u8 as f64;
        inter += p * y;
        union += p + y - p * y;
    }
    let grad = probs
        .iter()
        .zip(target)
        .map(|(_, &y)| {
            let y = y as u8 as f64;
            -(y * union - inter * (1.0 - y)) / (union * union)
        })
        .collect();
    Ok((1.0 - inter / union, grad))
}

/// `psi1 * hed + psi2 * soft_iou(sigmoid(logits))`.
pub fn edge_loss(logits: &Tensor, edges: &EdgeMap, psi1: f64, psi2: f64) -> Result<(f64, Tensor)> {
    let (hed, iou, grad) = edge_parts(logits, edges, psi1, psi2)?;
    Ok((psi1 * hed + psi2 * iou, grad))
}

/// Unmixed HED and soft-IoU values plus the gradient of the mixed loss.
pub(crate) fn edge_parts(
    logits: &Tensor,
    edges: &EdgeMap,
    psi1: f64,
    psi2: f64,
) -> Result<(f64, f64, Tensor)> {
    let (hed, mut grad) = hed_loss(logits, edges)?;
    let probs: Vec<f64> = logits.data().iter().map(|&z| sigmoid_scalar(z)).collect();
    let (iou, giou) = soft_iou_loss(&probs, edges.mask())?;
    for ((g, &gi), &p) in grad.data_mut().iter_mut().zip(&giou).zip(&probs) {
        *g = psi1 * *g + psi2 * gi * p * (1.0 - p);
    }
    Ok((hed, iou, grad))
}
