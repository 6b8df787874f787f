use super::distance::{distance_transform, DistanceTransformConfig, QuantizedDistanceMap};
use super::edges::{dilate_disk, extract_semantic_contours, raw_boundary, EDGE_DILATION_RADIUS};
use super::maps::{EdgeMap, InstanceMap, LabelMap};
use crate::error::{Axis, Error, Result};
use crate::task::Task;

/// Ground truth for all four tasks of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetBundle {
    pub edge: EdgeMap,
    pub seg: LabelMap,
    pub contour: LabelMap,
    pub distance: QuantizedDistanceMap,
}

impl TargetBundle {
    pub fn width(&self) -> usize {
        self.seg.width()
    }

    pub fn height(&self) -> usize {
        self.seg.height()
    }

    /// The class-valued target of a multi-class task.
    pub fn class_map(&self, task: Task) -> Option<LabelMap> {
        match task {
            Task::Segmentation => Some(self.seg.clone()),
            Task::Contour => Some(self.contour.clone()),
            Task::Distance => Some(self.distance.as_label_map()),
            Task::Edge => None,
        }
    }
}

pub fn build_targets(
    labels: &LabelMap,
    instances: &InstanceMap,
    config: DistanceTransformConfig,
) -> Result<TargetBundle> {
    Error::check(Axis::Width, labels.width(), instances.width())?;
    Error::check(Axis::Height, labels.height(), instances.height())?;
    let raw = raw_boundary(instances);
    let edge = dilate_disk(&raw, EDGE_DILATION_RADIUS);
    let contour = extract_semantic_contours(labels, &edge)?;
    let distance = distance_transform(instances, &raw, config)?;
    Ok(TargetBundle {
        edge,
        seg: labels.clone(),
        contour,
        distance,
    })
}
