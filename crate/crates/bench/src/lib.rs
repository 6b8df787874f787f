//! Fixtures shared by the benchmarks.

use hourglass_core::model::{ModelConfig, ModelParams};
use hourglass_core::trainer::prepare;
use hourglass_core::{synth_shapes, DistanceTransformConfig, Sample, TargetBundle, Tensor};

/// The desk-scale model used by the acceptance runs.
pub fn desk_config(size: usize) -> ModelConfig {
    ModelConfig {
        in_channels: 3,
        n_classes: 4,
        bins: 6,
        stages: 3,
        base_width: 8,
        input_size: size,
    }
}

pub fn desk_params(size: usize) -> ModelParams {
    ModelParams::init(desk_config(size), 1).expect("valid config")
}

/// `batch` synthetic samples stacked into one image tensor, with their targets.
pub fn desk_batch(batch: usize, size: usize) -> (Vec<Sample>, Tensor, Vec<TargetBundle>) {
    let samples = synth_shapes(3, batch, size, 4).expect("valid synth config");
    let images = Tensor::stack(&samples.iter().map(|s| s.image.clone()).collect::<Vec<_>>())
        .expect("same shapes");
    let targets = prepare(&samples, DistanceTransformConfig::default())
        .expect("targets")
        .into_iter()
        .map(|p| p.targets)
        .collect();
    (samples, images, targets)
}
