use crate::error::{Axis, Error, Result};
use crate::targets::LabelMap;

/// `N x N` pixel counts; entry `(i, j)` counts ground truth `i` predicted `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n: n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.n + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Tallies `pred` against `gt` over pixels where `mask` is true.
    pub fn accumulate(
        &mut self,
        pred: &LabelMap,
        gt: &LabelMap,
        mask: Option<&[bool]>,
    ) -> Result<()> {
        Error::check(Axis::Width, gt.width(), pred.width())?;
        Error::check(Axis::Height, gt.height(), pred.height())?;
        Error::check(Axis::Classes, self.n, gt.n_classes())?;
        Error::check(Axis::Classes, self.n, pred.n_classes())?;
        if let Some(m) = mask {
            Error::check(Axis::Length, gt.len(), m.len())?;
        }
        for (k, (&g, &p)) in gt.ids().iter().zip(pred.ids()).enumerate() {
            if mask.is_none_or(|m| m[k]) {
                self.counts[g as usize * self.n + p as usize] += 1;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        Error::check(Axis::Classes, self.n, other.n)?;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn true_positives(&self, c: usize) -> u64 {
        self.get(c, c)
    }

    /// Predicted `c` where the truth is another class.
    pub fn false_positives(&self, c: usize) -> u64 {
        (0..self.n)
            .filter(|&g| g != c)
            .map(|g| self.get(g, c))
            .sum()
    }

    /// Truth `c` predicted as another class.
    pub fn false_negatives(&self, c: usize) -> u64 {
        (0..self.n)
            .filter(|&p| p != c)
            .map(|p| self.get(c, p))
            .sum()
    }

    pub fn true_negatives(&self, c: usize) -> u64 {
        self.total() - self.true_positives(c) - self.false_positives(c) - self.false_negatives(c)
    }
}

pub fn confusion(pred: &LabelMap, gt: &LabelMap, mask: Option<&[bool]>) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(gt.n_classes());
    cm.accumulate(pred, gt, mask)?;
    Ok(cm)
}

/// Per-class and class-mean segmentation scores.
///
/// A class takes part in the means when it occurs in the ground truth or in
/// the prediction; others have `None` everywhere. Zero denominators of a
/// participating class (precision of a never-predicted class, recall of a
/// class absent from the truth) score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SegMetrics {
    pub iou: Vec<Option<f64>>,
    /// `(TP + TN) / total` per class.
    pub accuracy: Vec<Option<f64>>,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub mean_iou: f64,
    pub mean_accuracy: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(values: &[Option<f64>]) -> f64 {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    present.iter().sum::<f64>() / present.len() as f64
}

pub fn seg_metrics(cm: &ConfusionMatrix) -> Result<SegMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Degenerate("confusion matrix is empty".into()));
    }
    let n = cm.n_classes();
    let (mut iou, mut accuracy, mut precision, mut recall) =
        (vec![None; n], vec![None; n], vec![None; n], vec![None; n]);
    for c in 0..n {
        let (tp, fp, fnn) = (
            cm.true_positives(c),
            cm.false_positives(c),
            cm.false_negatives(c),
        );
        if tp + fp + fnn == 0 {
            continue;
        }
        let tn = total - tp - fp - fnn;
        iou[c] = Some(ratio(tp, tp + fp + fnn));
        accuracy[c] = Some(ratio(tp + tn, total));
        precision[c] = Some(ratio(tp, tp + fp));
        recall[c] = Some(ratio(tp, tp + fnn));
    }
    Ok(SegMetrics {
        mean_iou: mean(&iou),
        mean_accuracy: mean(&accuracy),
        mean_precision: mean(&precision),
        mean_recall: mean(&recall),
        iou,
        accuracy,
        precision,
        recall,
    })
}
