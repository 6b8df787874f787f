//! Task losses with analytic gradients in the logits, and the weighted
//! multi-task objective.

mod binary;
mod multilabel;
mod objective;

pub use binary::{edge_loss, hed_loss, soft_iou_loss, IOU_GUARD, PROB_EPSILON};
pub use multilabel::{
    balanced_multilabel_ce, contour_loss, energy_loss, mixed_multilabel_loss, multilabel_iou_loss,
    seg_loss,
};
pub use objective::{multitask_loss, total_loss, BalanceWeights, LossReport, LossWeights};

#[cfg(test)]
mod tests;
