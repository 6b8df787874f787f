pub mod edt;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod losses;
pub mod model;
pub mod ops;
pub mod targets;
pub mod task;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use gradcheck::{grad_check, GradCheck, GradCheckReport};
pub use ops::{Padding, PoolIndices};
pub use targets::{
    build_targets, class_balance_weights, synth_shapes, ClassWeights, DistanceTransformConfig,
    EdgeMap, InstanceMap, LabelMap, QuantizedDistanceMap, Sample, TargetBundle,
};
pub use task::{PerTask, Task, TaskSet};
pub use tensor::{Shape, Tensor};
