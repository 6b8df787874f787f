//! Deterministic multi-task training and held-out evaluation.

mod augment;
mod config;
mod log;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use augment::{augment, distance_target, prepare, AugmentConfig, AugmentParams, Prepared};
pub use config::TrainConfig;
pub use log::{LogRow, TrainLog};

use crate::error::{Error, Result};
use crate::evaluation::{seg_metrics, ConfusionMatrix, SegMetrics, TrimapPoint, TrimapTally};
use crate::losses::{multitask_loss, BalanceWeights};
use crate::model::{backward, forward, LatentDump, ModelConfig, ModelParams};
use crate::targets::{LabelMap, Sample, TargetBundle};
use crate::task::{Task, TaskSet};
use crate::tensor::Tensor;

/// Samples scored per forward pass during evaluation.
const EVAL_CHUNK: usize = 8;

/// Index of the first held-out sample: the last fifth of the dataset.
pub fn holdout_start(len: usize) -> usize {
    len - len / 5
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
    /// Bottleneck points of the held-out split; empty when it is.
    pub latent: LatentDump,
}

/// SGD with heavy-ball momentum: `v = mu v + g`, `theta -= lr v`, where `g`
/// is first rescaled to norm `clip` if it is longer.
struct Sgd {
    lr: f64,
    momentum: f64,
    clip: Option<f64>,
    velocity: Vec<f64>,
}

impl Sgd {
    fn step(&mut self, params: &mut ModelParams, grad: &[f64]) -> Result<()> {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = match self.clip {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        let mut flat = params.flatten();
        for ((p, v), g) in flat.iter_mut().zip(self.velocity.iter_mut()).zip(grad) {
            *v = self.momentum * *v + scale * g;
            *p -= self.lr * *v;
        }
        params.unflatten(&flat)
    }
}

fn stack_images(parts: &[&Prepared]) -> Result<Tensor> {
    Tensor::stack(&parts.iter().map(|p| p.image.clone()).collect::<Vec<_>>())
}

/// Trains on the first four fifths of `dataset` and evaluates on the rest.
pub fn train(cfg: &TrainConfig, dataset: &[Sample]) -> Result<TrainOutcome> {
    train_observed(cfg, dataset, |_| {})
}

/// [`train`], calling `observe` after every step.
pub fn train_observed(
    cfg: &TrainConfig,
    dataset: &[Sample],
    mut observe: impl FnMut(&LogRow),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = dataset
        .first()
        .ok_or_else(|| Error::Degenerate("empty dataset".into()))?;
    let split = holdout_start(dataset.len());
    let (train_set, holdout) = dataset.split_at(split);
    let n_classes = first.labels.n_classes();
    let side = first.image.shape();
    let model_cfg = ModelConfig {
        in_channels: side.c,
        n_classes,
        bins: cfg.distance.bins(),
        stages: cfg.stages,
        base_width: cfg.base_width,
        input_size: cfg.crop_size.unwrap_or(side.h),
    };
    if side.h != side.w && cfg.crop_size.is_none() {
        return Err(Error::Config(
            "whole-image training needs square images; set crop_size".into(),
        ));
    }
    let prepared = prepare(train_set, cfg.distance)?;
    let targets: Vec<TargetBundle> = prepared.iter().map(|p| p.targets.clone()).collect();
    let balance = BalanceWeights::from_targets(&targets)?;
    let weights = cfg.effective_loss();
    let active = weights.active_tasks();
    let aug = AugmentConfig {
        crop_size: cfg.crop_size,
        contrast: cfg.contrast,
        brightness: cfg.brightness,
        flip_probability: cfg.flip_probability,
    };

    let mut params = ModelParams::init(model_cfg, cfg.seed)?;
    let mut sgd = Sgd {
        lr: cfg.learning_rate,
        momentum: cfg.momentum,
        clip: cfg.grad_clip,
        velocity: vec![0.0; params.num_params()],
    };
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);
    let mut aug_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    aug_rng.set_stream(2);

    let epoch_len = prepared.len().div_ceil(cfg.batch_size).max(1);
    let eval_every = cfg.eval_every.unwrap_or(epoch_len);
    let mut order: Vec<usize> = Vec::new();
    let mut log = TrainLog::default();

    for iteration in 1..=cfg.iterations {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        while batch.len() < cfg.batch_size {
            if order.is_empty() {
                order = (0..prepared.len()).collect();
                order.shuffle(&mut order_rng);
                order.reverse();
            }
            batch.push(order.pop().expect("refilled"));
        }
        let draws = batch
            .iter()
            .map(|&i| {
                let s = prepared[i].image.shape();
                aug.draw(s.w, s.h, &mut aug_rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let augmented = batch
            .par_iter()
            .zip(draws.par_iter())
            .map(|(&i, p)| augment(&prepared[i], p))
            .collect::<Result<Vec<_>>>()?;
        let images = stack_images(&augmented.iter().collect::<Vec<_>>())?;
        let batch_targets: Vec<TargetBundle> = augmented.into_iter().map(|p| p.targets).collect();

        let out = forward(&params, &images, active, false)?;
        if let Some(t) = active
            .iter()
            .find(|&t| out.logits[t].as_ref().is_some_and(|l| !l.all_finite()))
        {
            return Err(Error::Divergence {
                iteration,
                detail: format!("non-finite {} logits", t.letter()),
            });
        }
        let (report, upstream) = multitask_loss(&out.logits, &batch_targets, &balance, &weights)?;
        if !report.total.is_finite() {
            return Err(Error::Divergence {
                iteration,
                detail: format!("loss is {}", report.total),
            });
        }
        let grads = backward(&params, &out.cache, &upstream)?;
        sgd.step(&mut params, &grads.flatten())?;
        if !params.all_finite() {
            return Err(Error::Divergence {
                iteration,
                detail: "non-finite parameters after the update".into(),
            });
        }

        let n = cfg.batch_size as f64;
        let holdout_miou = if !holdout.is_empty()
            && (iteration % eval_every == 0 || iteration == cfg.iterations)
        {
            Some(evaluate_epoch(&params, holdout)?.seg.mean_iou)
        } else {
            None
        };
        let row = LogRow {
            iteration,
            total: report.total,
            task_loss: Task::ALL.map(|t| report.task(t) / n),
            holdout_miou,
        };
        observe(&row);
        log.rows.push(row);
    }

    let latent = if holdout.is_empty() {
        LatentDump::new(params.config.stage_width(params.config.stages - 1))
    } else {
        latent_dump(&params, holdout)?
    };
    Ok(TrainOutcome {
        params,
        log,
        latent,
    })
}

/// Per-pixel argmax over the channels of a `(1, N, h, w)` slice of logits;
/// ties go to the lowest class.
pub fn argmax_labels(logits: &Tensor, sample: usize) -> Result<LabelMap> {
    let s = logits.shape();
    let plane = s.h * s.w;
    let mut ids = vec![0u8; plane];
    let mut best = logits.plane(sample, 0).to_vec();
    for c in 1..s.c {
        for ((b, id), &v) in best
            .iter_mut()
            .zip(ids.iter_mut())
            .zip(logits.plane(sample, c))
        {
            if v > *b {
                *b = v;
                *id = c as u8;
            }
        }
    }
    LabelMap::new(s.w, s.h, s.c, ids)
}

/// Segmentation predictions for every sample, in order.
pub fn predict(params: &ModelParams, samples: &[Sample]) -> Result<Vec<LabelMap>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_CHUNK) {
        let images = Tensor::stack(&chunk.iter().map(|s| s.image.clone()).collect::<Vec<_>>())?;
        let logits = forward(params, &images, TaskSet::only(Task::Segmentation), false)?.logits
            [Task::Segmentation]
            .take()
            .expect("requested");
        for i in 0..chunk.len() {
            out.push(argmax_labels(&logits, i)?);
        }
    }
    Ok(out)
}

/// Scores of a model on a labelled split.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub seg: SegMetrics,
}

/// Argmax segmentation of every sample scored against its labels.
pub fn evaluate_epoch(params: &ModelParams, split: &[Sample]) -> Result<MetricsReport> {
    if split.is_empty() {
        return Err(Error::Degenerate("cannot evaluate an empty split".into()));
    }
    let preds = predict(params, split)?;
    let mut cm = ConfusionMatrix::new(params.config.n_classes);
    for (p, s) in preds.iter().zip(split) {
        cm.accumulate(p, &s.labels, None)?;
    }
    let seg = seg_metrics(&cm)?;
    Ok(MetricsReport { confusion: cm, seg })
}

/// Trimap error curve of a model over a split.
pub fn evaluate_trimap(
    params: &ModelParams,
    split: &[Sample],
    widths: &[u32],
) -> Result<Vec<TrimapPoint>> {
    let mut tally = TrimapTally::new(widths)?;
    for (p, s) in predict(params, split)?.iter().zip(split) {
        tally.accumulate(p, &s.labels)?;
    }
    Ok(tally.curve())
}

/// Bottleneck points of every sample, tagged by block-majority class.
pub fn latent_dump(params: &ModelParams, samples: &[Sample]) -> Result<LatentDump> {
    let mut dump = LatentDump::new(params.config.stage_width(params.config.stages - 1));
    for chunk in samples.chunks(EVAL_CHUNK) {
        let images = Tensor::stack(&chunk.iter().map(|s| s.image.clone()).collect::<Vec<_>>())?;
        let latent = forward(params, &images, TaskSet::empty(), true)?
            .latent
            .expect("requested");
        dump.extend(
            &latent,
            &chunk.iter().map(|s| &s.labels).collect::<Vec<_>>(),
        )?;
    }
    Ok(dump)
}
