use super::maps::{EdgeMap, InstanceMap, LabelMap};
use crate::edt::{ceil_sqrt, squared_distance_to_seeds};
use crate::error::{Axis, Error, Result};
use crate::tensor::Tensor;

/// Truncation radius `R` (pixels) and bin count `K` of the quantized
/// distance transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistanceTransformConfig {
    truncation: u32,
    bins: usize,
}

impl Default for DistanceTransformConfig {
    fn default() -> Self {
        DistanceTransformConfig {
            truncation: 20,
            bins: 6,
        }
    }
}

impl DistanceTransformConfig {
    pub fn new(truncation: u32, bins: usize) -> Result<Self> {
        if truncation < 1 {
            return Err(Error::Config(
                "distance truncation must be at least 1 pixel".into(),
            ));
        }
        if !(2..=256).contains(&bins) {
            return Err(Error::Config(format!(
                "distance bin count {bins} outside 2..=256"
            )));
        }
        Ok(DistanceTransformConfig { truncation, bins })
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Bin of a truncated distance: uniform bins of width `R/K` over `[0, R]`,
    /// with `R` itself folded into the last bin.
    pub fn bin_of(&self, distance: u32) -> u8 {
        let k = (distance as u64 * self.bins as u64) / self.truncation as u64;
        k.min(self.bins as u64 - 1) as u8
    }

    /// Lower edge of each bin, `n * R / K`.
    pub fn representatives(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|n| n as f64 * self.truncation as f64 / self.bins as f64)
            .collect()
    }
}

/// Truncated distance to the nearest instance boundary and its bin index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedDistanceMap {
    width: usize,
    height: usize,
    config: DistanceTransformConfig,
    truncated: Vec<u32>,
    bins: Vec<u8>,
}

impl QuantizedDistanceMap {
    fn from_truncated(
        width: usize,
        height: usize,
        config: DistanceTransformConfig,
        truncated: Vec<u32>,
    ) -> Self {
        let bins = truncated.iter().map(|&d| config.bin_of(d)).collect();
        QuantizedDistanceMap {
            width,
            height,
            config,
            truncated,
            bins,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn config(&self) -> DistanceTransformConfig {
        self.config
    }

    /// Truncated distances in `0..=R`.
    pub fn truncated(&self) -> &[u32] {
        &self.truncated
    }

    pub fn bins(&self) -> &[u8] {
        &self.bins
    }

    /// Quantized value of every pixel: the representative of its bin.
    pub fn quantized(&self) -> Vec<f64> {
        let reps = self.config.representatives();
        self.bins.iter().map(|&b| reps[b as usize]).collect()
    }

    /// One-hot `(1, K, h, w)` encoding; every pixel has exactly one active bin.
    pub fn one_hot(&self) -> Tensor {
        self.as_label_map().one_hot()
    }

    /// Bins viewed as a `K`-class label map.
    pub fn as_label_map(&self) -> LabelMap {
        LabelMap::new(self.width, self.height, self.config.bins, self.bins.clone())
            .expect("bins are below K")
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<QuantizedDistanceMap> {
        let mut truncated = Vec::with_capacity(w * h);
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::dim(Axis::Width, self.width, x0 + w));
        }
        for y in y0..y0 + h {
            truncated
                .extend_from_slice(&self.truncated[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(Self::from_truncated(w, h, self.config, truncated))
    }

    pub fn flip_horizontal(&self) -> QuantizedDistanceMap {
        let mut truncated = self.truncated.clone();
        for row in truncated.chunks_mut(self.width.max(1)) {
            row.reverse();
        }
        Self::from_truncated(self.width, self.height, self.config, truncated)
    }

    /// Builds a map from per-pixel truncated distances, capping them at `R`.
    pub fn from_distances(
        width: usize,
        height: usize,
        config: DistanceTransformConfig,
        distances: Vec<u32>,
    ) -> Result<Self> {
        Error::check(Axis::Length, width * height, distances.len())?;
        let capped = distances
            .into_iter()
            .map(|d| d.min(config.truncation))
            .collect();
        Ok(Self::from_truncated(width, height, config, capped))
    }

    /// A map with every pixel at the same truncated distance.
    pub fn uniform(
        width: usize,
        height: usize,
        config: DistanceTransformConfig,
        distance: u32,
    ) -> Self {
        Self::from_truncated(
            width,
            height,
            config,
            vec![distance.min(config.truncation); width * height],
        )
    }
}

/// Truncated, quantized distance from every foreground pixel to the raw
/// (undilated) boundary set `boundary`; background pixels get distance 0.
///
/// Distances are Euclidean, rounded up to the next integer, and capped at `R`.
pub fn distance_transform(
    instances: &InstanceMap,
    boundary: &EdgeMap,
    config: DistanceTransformConfig,
) -> Result<QuantizedDistanceMap> {
    let (w, h) = (instances.width(), instances.height());
    Error::check(Axis::Width, w, boundary.width())?;
    Error::check(Axis::Height, h, boundary.height())?;

    let sq = squared_distance_to_seeds(boundary.mask(), w, h);
    let r = config.truncation;
    let mut truncated = Vec::with_capacity(w * h);
    for (&id, d2) in instances.ids().iter().zip(&sq) {
        if id == 0 {
            truncated.push(0);
            continue;
        }
        let d2 = d2.ok_or_else(|| {
            Error::Degenerate("foreground present but the boundary set is empty".into())
        })?;
        truncated.push((ceil_sqrt(d2).min(r as u64)) as u32);
    }
    Ok(QuantizedDistanceMap::from_truncated(
        w, h, config, truncated,
    ))
}
