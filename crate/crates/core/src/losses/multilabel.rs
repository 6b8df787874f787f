use super::binary::{clamped_sigmoid, IOU_GUARD};
use crate::error::{Axis, Error, Result};
use crate::ops::sigmoid_scalar;
use crate::targets::{ClassWeights, LabelMap};
use crate::tensor::Tensor;

fn check_logits(logits: &Tensor, target: &LabelMap) -> Result<usize> {
    let s = logits.shape();
    Error::check(Axis::Batch, 1, s.n)?;
    Error::check(Axis::Classes, target.n_classes(), s.c)?;
    Error::check(Axis::Height, target.height(), s.h)?;
    Error::check(Axis::Width, target.width(), s.w)?;
    Ok(s.c)
}

/// Per-channel sigmoid cross-entropy with class weights:
/// `-(1/N) sum_i alpha_i sum_p [y=i] ln P_i + [y!=i] ln(1 - P_i)`.
pub fn balanced_multilabel_ce(
    logits: &Tensor,
    target: &LabelMap,
    weights: &ClassWeights,
) -> Result<(f64, Tensor)> {
    let n = check_logits(logits, target)?;
    Error::check(Axis::Classes, n, weights.n_classes())?;
    let mut grad = Tensor::zeros(logits.shape());
    let mut value = 0.0;
    for class in 0..n {
        let alpha = weights.weight(class) / n as f64;
        let mut sum = 0.0;
        let z = logits.plane(0, class);
        let g = grad.plane_mut(0, class);
        for ((&z, &y), g) in z.iter().zip(target.ids()).zip(g) {
            let (p, clamped) = clamped_sigmoid(z);
            if y as usize == class {
                sum += p.ln();
                if !clamped {
                    *g = alpha * (p - 1.0);
                }
            } else {
                sum += (1.0 - p).ln();
                if !clamped {
                    *g = alpha * p;
                }
            }
        }
        value -= alpha * sum;
    }
    Ok((value, grad))
}

/// `1 - mean_i I_i / U_i` over soft per-class intersections and unions of
/// `(1, N, h, w)` probabilities against a one-hot target.
///
/// The mean runs over the classes that occur in the target. An absent class
/// has `I_i = 0` whatever the prediction, so it would only shift the loss by
/// a constant; false positives on it are left to the cross-entropy term.
pub fn multilabel_iou_loss(probs: &Tensor, target: &LabelMap) -> Result<(f64, Tensor)> {
    let n = check_logits(probs, target)?;
    let mut grad = Tensor::zeros(probs.shape());
    let present = target.classes_present();
    let n_present = present.iter().filter(|&&p| p).count();
    if n_present == 0 {
        return Ok((0.0, grad));
    }
    let mut ratio_sum = 0.0;
    for class in (0..n).filter(|&c| present[c]) {
        let p = probs.plane(0, class);
        let (mut inter, mut union) = (0.0, IOU_GUARD);
        for (&p, &y) in p.iter().zip(target.ids()) {
            let y = (y as usize == class) as u8 as f64;
            inter += p * y;
            union += p + y - p * y;
        }
        ratio_sum += inter / union;
        let u2 = union * union * n_present as f64;
        for (g, &y) in grad.plane_mut(0, class).iter_mut().zip(target.ids()) {
            let y = (y as usize == class) as u8 as f64;
            *g = -(y * union - inter * (1.0 - y)) / u2;
        }
    }
    Ok((1.0 - ratio_sum / n_present as f64, grad))
}

/// `a * balanced_multilabel_ce + b * multilabel_iou(sigmoid(logits))`.
///
/// Serves the segmentation, semantic-contour and energy heads, which differ
/// only in target, class weights and mixing pair.
pub fn mixed_multilabel_loss(
    logits: &Tensor,
    target: &LabelMap,
    weights: &ClassWeights,
    a: f64,
    b: f64,
) -> Result<(f64, Tensor)> {
    let (ce, iou, grad) = multilabel_parts(logits, target, weights, a, b)?;
    Ok((a * ce + b * iou, grad))
}

/// Unmixed CE and IoU values plus the gradient of the mixed loss.
pub(crate) fn multilabel_parts(
    logits: &Tensor,
    target: &LabelMap,
    weights: &ClassWeights,
    a: f64,
    b: f64,
) -> Result<(f64, f64, Tensor)> {
    let (ce, mut grad) = balanced_multilabel_ce(logits, target, weights)?;
    let probs = logits.map(sigmoid_scalar);
    let (iou, giou) = multilabel_iou_loss(&probs, target)?;
    for ((g, &gi), &p) in grad
        .data_mut()
        .iter_mut()
        .zip(giou.data())
        .zip(probs.data())
    {
        *g = a * *g + b * gi * p * (1.0 - p);
    }
    Ok((ce, iou, grad))
}

pub fn seg_loss(
    logits: &Tensor,
    labels: &LabelMap,
    alpha: &ClassWeights,
    psi3: f64,
    psi4: f64,
) -> Result<(f64, Tensor)> {
    mixed_multilabel_loss(logits, labels, alpha, psi3, psi4)
}

pub fn contour_loss(
    logits: &Tensor,
    contours: &LabelMap,
    weights: &ClassWeights,
    omega1: f64,
    omega2: f64,
) -> Result<(f64, Tensor)> {
    mixed_multilabel_loss(logits, contours, weights, omega1, omega2)
}

/// Loss on the quantized distance head; `bins` holds the bin index per pixel.
pub fn energy_loss(
    logits: &Tensor,
    bins: &LabelMap,
    mu: &ClassWeights,
    psi5: f64,
    psi6: f64,
) -> Result<(f64, Tensor)> {
    mixed_multilabel_loss(logits, bins, mu, psi5, psi6)
}
