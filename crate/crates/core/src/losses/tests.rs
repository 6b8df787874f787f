use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::gradcheck::GradCheck;
use crate::targets::{ClassWeights, DistanceTransformConfig, EdgeMap, LabelMap, TargetBundle};
use crate::task::{PerTask, Task};
use crate::tensor::{Shape, Tensor};

const SEEDS: u64 = 20;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_edges(r: &mut ChaCha8Rng, w: usize, h: usize) -> EdgeMap {
    EdgeMap::new(w, h, (0..w * h).map(|_| r.random_bool(0.3)).collect()).unwrap()
}

fn random_labels(r: &mut ChaCha8Rng, w: usize, h: usize, n: usize) -> LabelMap {
    LabelMap::new(
        w,
        h,
        n,
        (0..w * h).map(|_| r.random_range(0..n) as u8).collect(),
    )
    .unwrap()
}

fn random_weights(r: &mut ChaCha8Rng, n: usize) -> ClassWeights {
    ClassWeights::from_frequencies((0..n).map(|_| Some(r.random_range(0.1..1.0))).collect())
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Finite-difference check of `f` at `t` against `grad`.
fn fd_pass(t: &Tensor, grad: &Tensor, f: impl Fn(&Tensor) -> f64) {
    let shape = t.shape();
    let report = GradCheck::default()
        .check(
            |x| f(&Tensor::from_vec(shape, x.to_vec()).unwrap()),
            t.data(),
            grad.data(),
        )
        .unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn hed_four_pixel_example() {
    let edges = EdgeMap::new(4, 1, vec![true, false, false, false]).unwrap();
    let (v, _) = hed_loss(&Tensor::zeros(Shape::new(1, 1, 1, 4)), &edges).unwrap();
    let expected = std::f64::consts::LN_2 * (0.25 + 0.75 * 3.0);
    assert!((v - expected).abs() < 1e-12);
    assert!((v - 1.732868).abs() < 1e-6);
}

#[test]
fn hed_saturated_is_near_zero_and_has_no_gradient() {
    let mut r = rng(1);
    let edges = random_edges(&mut r, 6, 5);
    let logits = Tensor::from_vec(
        Shape::new(1, 1, 5, 6),
        edges
            .mask()
            .iter()
            .map(|&e| if e { 40.0 } else { -40.0 })
            .collect(),
    )
    .unwrap();
    let (v, g) = hed_loss(&logits, &edges).unwrap();
    assert!((0.0..=4.0 * 30.0 * PROB_EPSILON).contains(&v));
    assert_eq!(g.max_abs(), 0.0);
}

#[test]
fn hed_rejects_empty_and_mismatched_maps() {
    let empty = EdgeMap::empty(0, 0);
    assert!(hed_loss(&Tensor::zeros(Shape::new(1, 1, 0, 0)), &empty).is_err());
    let edges = EdgeMap::empty(4, 4);
    assert!(hed_loss(&Tensor::zeros(Shape::new(1, 1, 4, 5)), &edges).is_err());
    assert!(hed_loss(&Tensor::zeros(Shape::new(1, 2, 4, 4)), &edges).is_err());
}

#[test]
fn hed_matches_direct_formula_and_finite_differences() {
    for seed in 0..SEEDS {
        let mut r = rng(seed);
        let edges = random_edges(&mut r, 4, 4);
        let logits = Tensor::random_uniform(Shape::new(1, 1, 4, 4), -3.0, 3.0, &mut r);
        let (v, g) = hed_loss(&logits, &edges).unwrap();
        let beta = edges.count() as f64 / 16.0;
        let direct: f64 = logits
            .data()
            .iter()
            .zip(edges.mask())
            .map(|(&z, &e)| {
                if e {
                    -beta * sigmoid(z).ln()
                } else {
                    -(1.0 - beta) * (1.0 - sigmoid(z)).ln()
                }
            })
            .sum();
        assert!((v - direct).abs() < 1e-12);
        fd_pass(&logits, &g, |t| hed_loss(t, &edges).unwrap().0);
    }
}

#[test]
fn soft_iou_examples() {
    let y = [true, false, true, true];
    let p: Vec<f64> = y.iter().map(|&b| b as u8 as f64).collect();
    assert!(soft_iou_loss(&p, &y).unwrap().0.abs() < 1e-12);
    let q: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
    assert!((soft_iou_loss(&q, &y).unwrap().0 - 1.0).abs() < 1e-12);
    let (v, _) = soft_iou_loss(&[0.5, 0.5], &[true, false]).unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-12);
    assert!(soft_iou_loss(&[0.5], &[true, false]).is_err());
}

#[test]
fn soft_iou_finite_differences() {
    for seed in 0..SEEDS {
        let mut r = rng(100 + seed);
        let y: Vec<bool> = (0..16).map(|_| r.random_bool(0.4)).collect();
        let p: Vec<f64> = (0..16).map(|_| r.random_range(0.05..0.95)).collect();
        let (_, g) = soft_iou_loss(&p, &y).unwrap();
        let rep = GradCheck::default()
            .check(|x| soft_iou_loss(x, &y).unwrap().0, &p, &g)
            .unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}

#[test]
fn edge_loss_reductions_and_finite_differences() {
    let mut r = rng(7);
    let edges = random_edges(&mut r, 5, 4);
    let logits = Tensor::random_uniform(Shape::new(1, 1, 4, 5), -2.0, 2.0, &mut r);
    let (h, hg) = hed_loss(&logits, &edges).unwrap();
    let (e, eg) = edge_loss(&logits, &edges, 1.0, 0.0).unwrap();
    assert_eq!(h, e);
    assert_eq!(hg, eg);
    let perfect = edges
        .to_tensor()
        .map(|v| if v > 0.5 { 40.0 } else { -40.0 });
    assert!(edge_loss(&perfect, &edges, 0.0, 1.0).unwrap().0.abs() < 1e-12);

    for seed in 0..SEEDS {
        let mut r = rng(200 + seed);
        let edges = random_edges(&mut r, 4, 4);
        let logits = Tensor::random_uniform(Shape::new(1, 1, 4, 4), -3.0, 3.0, &mut r);
        let (p1, p2) = (r.random_range(0.1..2.0), r.random_range(0.1..2.0));
        let (_, g) = edge_loss(&logits, &edges, p1, p2).unwrap();
        fd_pass(&logits, &g, |t| edge_loss(t, &edges, p1, p2).unwrap().0);
    }
}

/// Independent evaluation of the weighted per-channel cross-entropy.
fn ce_oracle(logits: &Tensor, labels: &LabelMap, w: &ClassWeights) -> f64 {
    let s = logits.shape();
    let mut total = 0.0;
    for c in 0..s.c {
        for y in 0..s.h {
            for x in 0..s.w {
                let p = sigmoid(logits.at(0, c, y, x));
                let term = if labels.get(x, y) as usize == c {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                };
                total += w.weight(c) * term;
            }
        }
    }
    -total / s.c as f64
}

#[test]
fn multilabel_ce_single_class_is_plain_bce() {
    let mut r = rng(3);
    let labels = LabelMap::filled(3, 3, 1, 0).unwrap();
    let logits = Tensor::random_uniform(Shape::new(1, 1, 3, 3), -2.0, 2.0, &mut r);
    let (v, _) = balanced_multilabel_ce(&logits, &labels, &ClassWeights::uniform(1)).unwrap();
    let bce: f64 = logits.data().iter().map(|&z| -sigmoid(z).ln()).sum();
    assert!((v - bce).abs() < 1e-12);
}

#[test]
fn multilabel_ce_saturated_is_near_zero() {
    let mut r = rng(4);
    let labels = random_labels(&mut r, 4, 4, 3);
    let logits = labels.one_hot().map(|v| if v > 0.5 { 40.0 } else { -40.0 });
    let (v, _) = balanced_multilabel_ce(&logits, &labels, &ClassWeights::uniform(3)).unwrap();
    assert!((0.0..=3.0 * 16.0 * 2.0 * PROB_EPSILON).contains(&v));
}

#[test]
fn multilabel_ce_matches_oracle_and_finite_differences() {
    for seed in 0..SEEDS {
        let mut r = rng(300 + seed);
        let labels = random_labels(&mut r, 4, 4, 3);
        let w = random_weights(&mut r, 3);
        let logits = Tensor::random_uniform(Shape::new(1, 3, 4, 4), -3.0, 3.0, &mut r);
        let (v, g) = balanced_multilabel_ce(&logits, &labels, &w).unwrap();
        assert!((v - ce_oracle(&logits, &labels, &w)).abs() < 1e-12);
        fd_pass(&logits, &g, |t| {
            balanced_multilabel_ce(t, &labels, &w).unwrap().0
        });
    }
}

#[test]
fn multilabel_ce_checks_class_counts() {
    let labels = LabelMap::filled(2, 2, 3, 0).unwrap();
    let logits = Tensor::zeros(Shape::new(1, 2, 2, 2));
    assert!(balanced_multilabel_ce(&logits, &labels, &ClassWeights::uniform(3)).is_err());
    let logits = Tensor::zeros(Shape::new(1, 3, 2, 2));
    assert!(balanced_multilabel_ce(&logits, &labels, &ClassWeights::uniform(2)).is_err());
}

#[test]
fn multilabel_iou_examples() {
    let labels = LabelMap::new(2, 2, 4, vec![0, 1, 2, 3]).unwrap();
    assert!(
        multilabel_iou_loss(&labels.one_hot(), &labels)
            .unwrap()
            .0
            .abs()
            < 1e-10
    );
    // One class everywhere, uniform 1/N: I = hw/N and U = hw for the only
    // class present, so the loss is 1 - 1/N.
    for n in 2..6 {
        let labels = LabelMap::filled(5, 3, n, 1).unwrap();
        let probs = Tensor::full(Shape::new(1, n, 3, 5), 1.0 / n as f64);
        let v = multilabel_iou_loss(&probs, &labels).unwrap().0;
        assert!((v - (1.0 - 1.0 / n as f64)).abs() < 1e-12);
    }
    // Perfect prediction on a one-class image ignores the absent classes.
    let labels = LabelMap::filled(3, 3, 4, 2).unwrap();
    assert!(
        multilabel_iou_loss(&labels.one_hot(), &labels)
            .unwrap()
            .0
            .abs()
            < 1e-10
    );
}

#[test]
fn multilabel_iou_finite_differences() {
    for seed in 0..SEEDS {
        let mut r = rng(400 + seed);
        let labels = random_labels(&mut r, 4, 4, 3);
        let probs = Tensor::random_uniform(Shape::new(1, 3, 4, 4), 0.05, 0.95, &mut r);
        let (_, g) = multilabel_iou_loss(&probs, &labels).unwrap();
        fd_pass(&probs, &g, |t| multilabel_iou_loss(t, &labels).unwrap().0);
    }
}

#[test]
fn mixed_losses_reduce_and_pass_finite_differences() {
    let mut r = rng(9);
    let labels = random_labels(&mut r, 4, 4, 3);
    let w = random_weights(&mut r, 3);
    let logits = Tensor::random_uniform(Shape::new(1, 3, 4, 4), -2.0, 2.0, &mut r);
    let (ce, _) = balanced_multilabel_ce(&logits, &labels, &w).unwrap();
    let (s, _) = seg_loss(&logits, &labels, &w, 0.7, 0.0).unwrap();
    assert!((s - 0.7 * ce).abs() < 1e-12);

    let bins = LabelMap::filled(4, 4, 6, 0).unwrap();
    let sat = bins.one_hot().map(|v| if v > 0.5 { 40.0 } else { -40.0 });
    assert!(
        energy_loss(&sat, &bins, &ClassWeights::uniform(6), 1.0, 1.0)
            .unwrap()
            .0
            < 1e-5
    );

    type LossFn = fn(&Tensor, &LabelMap, &ClassWeights, f64, f64) -> crate::Result<(f64, Tensor)>;
    let losses: [(LossFn, usize); 3] = [(seg_loss, 3), (contour_loss, 4), (energy_loss, 6)];
    for (k, (f, n)) in losses.into_iter().enumerate() {
        for seed in 0..SEEDS {
            let mut r = rng(500 + 100 * k as u64 + seed);
            let labels = random_labels(&mut r, 4, 4, n);
            let w = random_weights(&mut r, n);
            let (a, b) = (r.random_range(0.1..2.0), r.random_range(0.1..2.0));
            let logits = Tensor::random_uniform(Shape::new(1, n, 4, 4), -3.0, 3.0, &mut r);
            let (_, g) = f(&logits, &labels, &w, a, b).unwrap();
            fd_pass(&logits, &g, |t| f(t, &labels, &w, a, b).unwrap().0);
        }
    }
}

#[test]
fn total_loss_examples() {
    let one = LossWeights {
        lambda: PerTask([0.0, 1.0, 0.0, 0.0]),
        ..Default::default()
    };
    assert_eq!(
        total_loss(&PerTask([9.0, 2.5, 9.0, 9.0]), &one, 1).unwrap(),
        2.5
    );
    let two = LossWeights {
        lambda: PerTask([1.0, 1.0, 0.0, 0.0]),
        ..Default::default()
    };
    assert_eq!(
        total_loss(&PerTask([3.0, 3.0, 0.0, 0.0]), &two, 1).unwrap(),
        3.0
    );
    let none = LossWeights {
        lambda: PerTask([0.0; 4]),
        ..Default::default()
    };
    assert!(matches!(
        total_loss(&PerTask([1.0; 4]), &none, 1),
        Err(crate::Error::Config(_))
    ));
    assert!(none.validate().is_err());
    let negative = LossWeights {
        psi: [1.0, -1.0, 1.0, 1.0, 1.0, 1.0],
        ..Default::default()
    };
    assert!(negative.validate().is_err());
}

#[test]
fn total_loss_random_oracle() {
    for seed in 0..SEEDS {
        let mut r = rng(900 + seed);
        let lambda = PerTask::from_fn(|_| {
            if r.random_bool(0.25) {
                0.0
            } else {
                r.random_range(0.1..3.0)
            }
        });
        if lambda.0.iter().all(|&l| l == 0.0) {
            continue;
        }
        let values = PerTask::from_fn(|_| r.random_range(0.0..50.0));
        let n = r.random_range(1..8);
        let w = LossWeights {
            lambda,
            ..Default::default()
        };
        let k = lambda.0.iter().filter(|&&l| l > 0.0).count() as f64;
        let expected = (0..4).map(|i| lambda.0[i] * values.0[i]).sum::<f64>() / (k * n as f64);
        assert!((total_loss(&values, &w, n).unwrap() - expected).abs() < 1e-12);
    }
}

fn random_bundle(r: &mut ChaCha8Rng, size: usize, n_classes: usize) -> TargetBundle {
    let cfg = DistanceTransformConfig::new(6, 4).unwrap();
    let labels = random_labels(r, size, size, n_classes);
    let bins: Vec<u32> = (0..size * size).map(|_| r.random_range(0..=6)).collect();
    let distance =
        crate::targets::QuantizedDistanceMap::from_distances(size, size, cfg, bins).unwrap();
    TargetBundle {
        edge: random_edges(r, size, size),
        contour: random_labels(r, size, size, n_classes),
        seg: labels,
        distance,
    }
}

fn random_outputs(
    r: &mut ChaCha8Rng,
    n: usize,
    size: usize,
    classes: usize,
    bins: usize,
) -> PerTask<Option<Tensor>> {
    PerTask::from_fn(|t| {
        let depth = match t {
            Task::Edge => 1,
            Task::Distance => bins,
            _ => classes,
        };
        Some(Tensor::random_uniform(
            Shape::new(n, depth, size, size),
            -2.0,
            2.0,
            r,
        ))
    })
}

#[test]
fn multitask_loss_combines_per_sample_losses() {
    let mut r = rng(11);
    let targets: Vec<TargetBundle> = (0..3).map(|_| random_bundle(&mut r, 4, 3)).collect();
    let outputs = random_outputs(&mut r, 3, 4, 3, 4);
    let balance = BalanceWeights::from_targets(&targets).unwrap();
    let w = LossWeights::default();
    let (report, grads) = multitask_loss(&outputs, &targets, &balance, &w).unwrap();

    let mut seg = 0.0;
    let mut edge = 0.0;
    for (i, t) in targets.iter().enumerate() {
        let o = outputs[Task::Segmentation].as_ref().unwrap().sample(i);
        seg += seg_loss(&o, &t.seg, &balance.seg, 1.0, 1.0).unwrap().0;
        let o = outputs[Task::Edge].as_ref().unwrap().sample(i);
        edge += edge_loss(&o, &t.edge, 1.0, 1.0).unwrap().0;
    }
    assert!((report.seg - seg).abs() < 1e-9);
    assert!((report.edge - edge).abs() < 1e-9);
    assert!((report.seg - report.seg_ce - report.seg_iou).abs() < 1e-9);
    assert_eq!(report.total, total_loss(&report.per_task(), &w, 3).unwrap());
    assert!(grads.iter().all(|(_, g)| g.is_some()));
}

#[test]
fn multitask_loss_skips_zero_weight_heads() {
    let mut r = rng(12);
    let targets: Vec<TargetBundle> = (0..2).map(|_| random_bundle(&mut r, 4, 3)).collect();
    let mut outputs = random_outputs(&mut r, 2, 4, 3, 4);
    outputs[Task::Edge] = None;
    let w = LossWeights {
        lambda: PerTask([0.0, 1.0, 1.0, 0.0]),
        ..Default::default()
    };
    let (report, grads) =
        multitask_loss(&outputs, &targets, &BalanceWeights::uniform(3, 4), &w).unwrap();
    assert_eq!(report.edge, 0.0);
    assert_eq!(report.energy, 0.0);
    assert!(grads[Task::Edge].is_none() && grads[Task::Distance].is_none());
    let missing = LossWeights::default();
    assert!(multitask_loss(&outputs, &targets, &BalanceWeights::uniform(3, 4), &missing).is_err());
}

#[test]
fn multitask_loss_finite_differences() {
    for seed in 0..SEEDS {
        let mut r = rng(1000 + seed);
        let targets: Vec<TargetBundle> = (0..2).map(|_| random_bundle(&mut r, 4, 3)).collect();
        let outputs = random_outputs(&mut r, 2, 4, 3, 4);
        let balance = BalanceWeights::from_targets(&targets).unwrap();
        let w = LossWeights {
            lambda: PerTask::from_fn(|_| r.random_range(0.2..2.0)),
            ..Default::default()
        };
        let (_, grads) = multitask_loss(&outputs, &targets, &balance, &w).unwrap();
        for task in Task::ALL {
            let g = grads[task].as_ref().unwrap();
            fd_pass(outputs[task].as_ref().unwrap(), g, |t| {
                let mut o = outputs.clone();
                o[task] = Some(t.clone());
                multitask_loss(&o, &targets, &balance, &w).unwrap().0.total
            });
        }
    }
}

proptest! {
    #[test]
    fn losses_are_finite_and_non_negative(seed in any::<u64>(), scale in 0.1f64..60.0) {
        let mut r = rng(seed);
        let edges = random_edges(&mut r, 5, 5);
        let z = Tensor::random_uniform(Shape::new(1, 1, 5, 5), -scale, scale, &mut r);
        let (v, g) = edge_loss(&z, &edges, 1.0, 1.0).unwrap();
        prop_assert!(v.is_finite() && v >= 0.0 && g.all_finite());
        let labels = random_labels(&mut r, 5, 5, 4);
        let w = random_weights(&mut r, 4);
        let z = Tensor::random_uniform(Shape::new(1, 4, 5, 5), -scale, scale, &mut r);
        let (v, g) = seg_loss(&z, &labels, &w, 1.0, 1.0).unwrap();
        prop_assert!(v.is_finite() && v >= 0.0 && g.all_finite());
    }

    #[test]
    fn total_is_homogeneous_in_each_lambda(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut r = rng(seed);
        let values = PerTask::from_fn(|_| r.random_range(0.0..10.0));
        let base = LossWeights::default();
        let mut scaled = base;
        scaled.lambda[Task::Contour] *= c;
        let n = 4;
        let contrib = |w: &LossWeights| total_loss(&values, w, n).unwrap();
        let delta = contrib(&scaled) - contrib(&base);
        let expected = (c - 1.0) * values[Task::Contour] / (4.0 * n as f64);
        prop_assert!((delta - expected).abs() < 1e-9);
    }

    #[test]
    fn raising_iou_mix_never_lowers_edge_loss(seed in any::<u64>(), lo in 0.0f64..2.0, extra in 0.0f64..2.0) {
        let mut r = rng(seed);
        let edges = random_edges(&mut r, 4, 4);
        let z = Tensor::random_uniform(Shape::new(1, 1, 4, 4), -3.0, 3.0, &mut r);
        let a = edge_loss(&z, &edges, 1.0, lo).unwrap().0;
        let b = edge_loss(&z, &edges, 1.0, lo + extra).unwrap().0;
        prop_assert!(b >= a);
    }
}
