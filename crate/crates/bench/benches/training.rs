use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hourglass_bench::{desk_batch, desk_params};
use hourglass_core::losses::{multitask_loss, BalanceWeights, LossWeights};
use hourglass_core::model::{backward, forward};
use hourglass_core::TaskSet;

fn step(c: &mut Criterion) {
    let params = desk_params(32);
    let (_, images, targets) = desk_batch(4, 32);
    let balance = BalanceWeights::from_targets(&targets).unwrap();
    let mut g = c.benchmark_group("train_step_4x32");
    for tasks in ["S", "E,S,C,D"] {
        let set: TaskSet = tasks.parse().unwrap();
        let weights = LossWeights::default().restricted_to(set);
        g.bench_function(tasks, |b| {
            b.iter(|| {
                let out = forward(&params, black_box(&images), set, false).unwrap();
                let (_, up) = multitask_loss(&out.logits, &targets, &balance, &weights).unwrap();
                backward(&params, &out.cache, &up).unwrap()
            })
        });
    }
    g.finish();
}

fn inference(c: &mut Criterion) {
    let params = desk_params(64);
    let (_, images, _) = desk_batch(8, 64);
    c.bench_function("forward_seg_8x64", |b| {
        b.iter(|| forward(&params, black_box(&images), "S".parse().unwrap(), true).unwrap())
    });
}

criterion_group!(benches, step, inference);
criterion_main!(benches);
