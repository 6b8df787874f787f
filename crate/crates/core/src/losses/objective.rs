use super::binary::edge_parts;
use super::multilabel::multilabel_parts;
use crate::error::{Axis, Error, Result};
use crate::targets::{class_balance_weights, ClassWeights, LabelMap, TargetBundle};
use crate::task::{PerTask, Task, TaskSet};
use crate::tensor::{Shape, Tensor};

/// Mixing coefficients inside each task loss and the per-task weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// `psi[0..2]` edge (HED, IoU), `psi[2..4]` segmentation (CE, IoU),
    /// `psi[4..6]` energy (CE, IoU).
    pub psi: [f64; 6],
    /// Semantic-contour (CE, IoU).
    pub omega: [f64; 2],
    pub lambda: PerTask<f64>,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            psi: [1.0; 6],
            omega: [1.0; 2],
            lambda: PerTask([1.0; 4]),
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .psi
            .iter()
            .chain(&self.omega)
            .chain(self.lambda.0.iter());
        for &v in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "loss weight {v} must be finite and non-negative"
                )));
            }
        }
        if self.active_tasks().is_empty() {
            return Err(Error::Config(
                "at least one task weight must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Tasks whose weight is positive.
    pub fn active_tasks(&self) -> TaskSet {
        Task::ALL
            .into_iter()
            .filter(|&t| self.lambda[t] > 0.0)
            .collect()
    }

    /// Same weights with `lambda` zeroed outside `tasks`.
    pub fn restricted_to(&self, tasks: TaskSet) -> LossWeights {
        let mut out = *self;
        for t in Task::ALL {
            if !tasks.contains(t) {
                out.lambda[t] = 0.0;
            }
        }
        out
    }

    /// Mixing pair `(ce-like, iou)` of a task.
    pub fn mix(&self, task: Task) -> (f64, f64) {
        match task {
            Task::Edge => (self.psi[0], self.psi[1]),
            Task::Segmentation => (self.psi[2], self.psi[3]),
            Task::Contour => (self.omega[0], self.omega[1]),
            Task::Distance => (self.psi[4], self.psi[5]),
        }
    }
}

/// `(1 / (|T| n)) sum_t lambda_t L_t` where `L_t` is already summed over the
/// batch and `|T|` counts tasks with positive weight.
pub fn total_loss(values: &PerTask<f64>, weights: &LossWeights, batch: usize) -> Result<f64> {
    let active = weights.active_tasks();
    if active.is_empty() {
        return Err(Error::Config(
            "at least one task weight must be positive".into(),
        ));
    }
    if batch == 0 {
        return Err(Error::Degenerate("empty batch".into()));
    }
    let mut sum = 0.0;
    for t in active.iter() {
        if !values[t].is_finite() {
            return Err(Error::Evaluation(format!("non-finite {} loss", t.letter())));
        }
        sum += weights.lambda[t] * values[t];
    }
    Ok(sum / (active.len() * batch) as f64)
}

/// Class weights of the three multi-class heads.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceWeights {
    pub seg: ClassWeights,
    pub contour: ClassWeights,
    /// Over distance-bin occupancy.
    pub energy: ClassWeights,
}

impl BalanceWeights {
    pub fn from_targets(targets: &[TargetBundle]) -> Result<Self> {
        let seg: Vec<LabelMap> = targets.iter().map(|t| t.seg.clone()).collect();
        let contour: Vec<LabelMap> = targets.iter().map(|t| t.contour.clone()).collect();
        let energy: Vec<LabelMap> = targets.iter().map(|t| t.distance.as_label_map()).collect();
        Ok(BalanceWeights {
            seg: class_balance_weights(&seg)?,
            contour: class_balance_weights(&contour)?,
            energy: class_balance_weights(&energy)?,
        })
    }

    pub fn uniform(n_classes: usize, bins: usize) -> Self {
        BalanceWeights {
            seg: ClassWeights::uniform(n_classes),
            contour: ClassWeights::uniform(n_classes),
            energy: ClassWeights::uniform(bins),
        }
    }

    fn for_task(&self, task: Task) -> Option<&ClassWeights> {
        match task {
            Task::Edge => None,
            Task::Segmentation => Some(&self.seg),
            Task::Contour => Some(&self.contour),
            Task::Distance => Some(&self.energy),
        }
    }
}

/// Loss components, each summed over the batch, and the combined objective.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub edge_hed: f64,
    pub edge_iou: f64,
    pub edge: f64,
    pub seg_ce: f64,
    pub seg_iou: f64,
    pub seg: f64,
    pub contour_ce: f64,
    pub contour_iou: f64,
    pub contour: f64,
    pub energy_ce: f64,
    pub energy_iou: f64,
    pub energy: f64,
    pub total: f64,
}

impl LossReport {
    pub fn task(&self, task: Task) -> f64 {
        match task {
            Task::Edge => self.edge,
            Task::Segmentation => self.seg,
            Task::Contour => self.contour,
            Task::Distance => self.energy,
        }
    }

    pub fn per_task(&self) -> PerTask<f64> {
        PerTask::from_fn(|t| self.task(t))
    }

    fn set(&mut self, task: Task, parts: (f64, f64), value: f64) {
        let slot = match task {
            Task::Edge => (&mut self.edge_hed, &mut self.edge_iou, &mut self.edge),
            Task::Segmentation => (&mut self.seg_ce, &mut self.seg_iou, &mut self.seg),
            Task::Contour => (
                &mut self.contour_ce,
                &mut self.contour_iou,
                &mut self.contour,
            ),
            Task::Distance => (&mut self.energy_ce, &mut self.energy_iou, &mut self.energy),
        };
        *slot.0 = parts.0;
        *slot.1 = parts.1;
        *slot.2 = value;
    }
}

/// Loss of one head on one sample: `(ce-like part, iou part, grad of mix)`.
fn head_parts(
    task: Task,
    logits: &Tensor,
    target: &TargetBundle,
    balance: &BalanceWeights,
    weights: &LossWeights,
) -> Result<(f64, f64, Tensor)> {
    let (a, b) = weights.mix(task);
    match task {
        Task::Edge => edge_parts(logits, &target.edge, a, b),
        Task::Segmentation => multilabel_parts(logits, &target.seg, &balance.seg, a, b),
        Task::Contour => multilabel_parts(logits, &target.contour, &balance.contour, a, b),
        Task::Distance => {
            let bins = target.distance.as_label_map();
            multilabel_parts(
                logits,
                &bins,
                balance.for_task(task).expect("distance has weights"),
                a,
                b,
            )
        }
    }
}

/// Evaluates the combined objective over a batch of head outputs.
///
/// `outputs[t]` must be present, with shape `(n, depth_t, h, w)`, for every
/// task with positive weight; other heads are ignored. Returns the report and
/// the gradient of `report.total` with respect to each active head's logits.
pub fn multitask_loss(
    outputs: &PerTask<Option<Tensor>>,
    targets: &[TargetBundle],
    balance: &BalanceWeights,
    weights: &LossWeights,
) -> Result<(LossReport, PerTask<Option<Tensor>>)> {
    weights.validate()?;
    let active = weights.active_tasks();
    let n = targets.len();
    let mut report = LossReport::default();
    let mut grads = PerTask::from_fn(|_| None);
    for task in active.iter() {
        let out = outputs[task]
            .as_ref()
            .ok_or_else(|| Error::State(format!("no output for active task {}", task.letter())))?;
        let s = out.shape();
        Error::check(Axis::Batch, n, s.n)?;
        let scale = weights.lambda[task] / (active.len() * n) as f64;
        let mut grad = Tensor::zeros(s);
        let (mut p0, mut p1) = (0.0, 0.0);
        let plane_len = Shape::new(1, s.c, s.h, s.w).numel();
        for (i, target) in targets.iter().enumerate() {
            let (a, b, g) = head_parts(task, &out.sample(i), target, balance, weights)?;
            p0 += a;
            p1 += b;
            let dst = &mut grad.data_mut()[i * plane_len..(i + 1) * plane_len];
            for (d, &v) in dst.iter_mut().zip(g.data()) {
                *d = scale * v;
            }
        }
        let (wa, wb) = weights.mix(task);
        report.set(task, (p0, p1), wa * p0 + wb * p1);
        grads[task] = Some(grad);
    }
    report.total = total_loss(&report.per_task(), weights, n)?;
    Ok((report, grads))
}
