//! Supervision targets derived from label and instance maps, class-balance
//! weights, and the synthetic dataset.

mod balance;
mod bundle;
mod distance;
mod edges;
pub mod io;
mod maps;
mod synth;

pub use balance::{class_balance_weights, ClassWeights};
pub use bundle::{build_targets, TargetBundle};
pub use distance::{distance_transform, DistanceTransformConfig, QuantizedDistanceMap};
pub use edges::{
    dilate_disk, disk_offsets, extract_edges, extract_semantic_contours, raw_boundary,
    EDGE_DILATION_RADIUS,
};
pub use maps::{EdgeMap, InstanceMap, LabelMap, BACKGROUND_CLASS};
pub use synth::{synth_shapes, Sample, MIN_IMAGE_SIZE, MIN_SHAPE_EXTENT};
