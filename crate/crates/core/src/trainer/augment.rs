use rand::Rng;

use crate::error::{Error, Result};
use crate::targets::{
    distance_transform, raw_boundary, DistanceTransformConfig, InstanceMap, QuantizedDistanceMap,
    Sample, TargetBundle,
};
use crate::tensor::{Shape, Tensor};

/// A training example with its full-image targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub image: Tensor,
    pub instances: InstanceMap,
    pub targets: TargetBundle,
}

/// One draw of augmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub x0: usize,
    pub y0: usize,
    pub size: (usize, usize),
    pub flip: bool,
    pub contrast: f64,
    pub brightness: f64,
}

/// Ranges the augmentation parameters are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub crop_size: Option<usize>,
    pub contrast: (f64, f64),
    pub brightness: (f64, f64),
    pub flip_probability: f64,
}

impl AugmentConfig {
    /// Leaves every sample unchanged.
    pub fn identity() -> Self {
        AugmentConfig {
            crop_size: None,
            contrast: (1.0, 1.0),
            brightness: (0.0, 0.0),
            flip_probability: 0.0,
        }
    }

    /// Always draws five values in the same order, whatever the ranges, so
    /// the random stream does not depend on the configuration.
    pub fn draw<R: Rng + ?Sized>(
        &self,
        width: usize,
        height: usize,
        rng: &mut R,
    ) -> Result<AugmentParams> {
        let (cw, ch) = match self.crop_size {
            Some(c) if c > width || c > height => {
                return Err(Error::Config(format!(
                    "crop {c} does not fit a {width}x{height} image"
                )))
            }
            Some(c) => (c, c),
            None => (width, height),
        };
        let ux: f64 = rng.random();
        let uy: f64 = rng.random();
        let uf: f64 = rng.random();
        let uc: f64 = rng.random();
        let ub: f64 = rng.random();
        let pick = |u: f64, span: usize| ((u * (span + 1) as f64) as usize).min(span);
        let lerp = |u: f64, (lo, hi): (f64, f64)| lo + u * (hi - lo);
        Ok(AugmentParams {
            x0: pick(ux, width - cw),
            y0: pick(uy, height - ch),
            size: (cw, ch),
            flip: uf < self.flip_probability,
            contrast: lerp(uc, self.contrast),
            brightness: lerp(ub, self.brightness),
        })
    }
}

fn crop_image(image: &Tensor, x0: usize, y0: usize, w: usize, h: usize) -> Tensor {
    let s = image.shape();
    let mut out = Tensor::zeros(Shape::new(s.n, s.c, h, w));
    for n in 0..s.n {
        for c in 0..s.c {
            let src = image.plane(n, c);
            let dst = out.plane_mut(n, c);
            for y in 0..h {
                dst[y * w..(y + 1) * w]
                    .copy_from_slice(&src[(y0 + y) * s.w + x0..(y0 + y) * s.w + x0 + w]);
            }
        }
    }
    out
}

fn flip_image(image: &Tensor) -> Tensor {
    let s = image.shape();
    let mut out = image.clone();
    for n in 0..s.n {
        for c in 0..s.c {
            for row in out.plane_mut(n, c).chunks_mut(s.w.max(1)) {
                row.reverse();
            }
        }
    }
    out
}

/// Distance target of an instance map. Foreground without any boundary
/// pixel, which only a crop inside one instance can produce, is set to the
/// truncation distance.
pub fn distance_target(
    instances: &InstanceMap,
    config: DistanceTransformConfig,
) -> Result<QuantizedDistanceMap> {
    match distance_transform(instances, &raw_boundary(instances), config) {
        Err(Error::Degenerate(_)) => {
            let d = instances
                .ids()
                .iter()
                .map(|&i| if i == 0 { 0 } else { config.truncation() })
                .collect();
            QuantizedDistanceMap::from_distances(instances.width(), instances.height(), config, d)
        }
        other => other,
    }
}

/// Crops and flips the image and every target alike, then applies
/// `(x - mean) * contrast + mean + brightness` to the image alone. Label
/// maps are sliced exactly; the distance target is recomputed on the
/// transformed instance map.
pub fn augment(sample: &Prepared, p: &AugmentParams) -> Result<Prepared> {
    let (w, h) = p.size;
    let t = &sample.targets;
    let mut image = crop_image(&sample.image, p.x0, p.y0, w, h);
    let mut instances = sample.instances.crop(p.x0, p.y0, w, h)?;
    let mut edge = t.edge.crop(p.x0, p.y0, w, h)?;
    let mut seg = t.seg.crop(p.x0, p.y0, w, h)?;
    let mut contour = t.contour.crop(p.x0, p.y0, w, h)?;
    if p.flip {
        image = flip_image(&image);
        instances = instances.flip_horizontal();
        edge = edge.flip_horizontal();
        seg = seg.flip_horizontal();
        contour = contour.flip_horizontal();
    }
    if p.contrast != 1.0 || p.brightness != 0.0 {
        let mean = image.sum() / image.len().max(1) as f64;
        image = image.map(|x| (x - mean) * p.contrast + mean + p.brightness);
    }
    let distance = distance_target(&instances, t.distance.config())?;
    Ok(Prepared {
        image,
        instances,
        targets: TargetBundle {
            edge,
            seg,
            contour,
            distance,
        },
    })
}

/// Builds full-image targets for every sample.
pub fn prepare(samples: &[Sample], config: DistanceTransformConfig) -> Result<Vec<Prepared>> {
    samples
        .iter()
        .map(|s| {
            let raw = raw_boundary(&s.instances);
            let edge = crate::targets::dilate_disk(&raw, crate::targets::EDGE_DILATION_RADIUS);
            let contour = crate::targets::extract_semantic_contours(&s.labels, &edge)?;
            Ok(Prepared {
                image: s.image.clone(),
                instances: s.instances.clone(),
                targets: TargetBundle {
                    edge,
                    seg: s.labels.clone(),
                    contour,
                    distance: distance_target(&s.instances, config)?,
                },
            })
        })
        .collect()
}
