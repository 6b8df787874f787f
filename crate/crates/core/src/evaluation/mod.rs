//! Segmentation scores, boundary-band error curves and latent clustering
//! scores.

mod cluster;
mod confusion;
mod report;
mod trimap;

pub use cluster::{calinski_harabasz, davies_bouldin, latent_metrics, silhouette, ClusterScores};
pub use confusion::{confusion, seg_metrics, ConfusionMatrix, SegMetrics};
pub use report::{write_cluster_csv, write_latent_csv, write_metrics_csv, write_trimap_csv};
pub use trimap::{class_contours, trimap_band, trimap_curve, TrimapBand, TrimapPoint, TrimapTally};

#[cfg(test)]
mod tests;
