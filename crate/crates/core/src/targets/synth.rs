//! Seeded synthetic-shapes dataset.
//!
//! Each sample is a textured background with 2 to 6 rectangles, circles and
//! triangles. The shape kind and base colour follow the class, so the task is
//! learnable but not trivial once noise and colour jitter are added.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::maps::{InstanceMap, LabelMap};
use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// Smallest bounding-box extent of a generated shape, in pixels.
pub const MIN_SHAPE_EXTENT: usize = 6;
/// Smallest image side that can hold a shape with room to move.
pub const MIN_IMAGE_SIZE: usize = 16;

const NOISE_SIGMA: f64 = 0.05;
const COLOR_JITTER: f64 = 0.08;

/// One generated (or loaded) training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `(1, 3, size, size)` RGB image with values in `[0, 1]`.
    pub image: Tensor,
    pub labels: LabelMap,
    pub instances: InstanceMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShapeKind {
    Rectangle,
    Circle,
    Triangle,
}

impl ShapeKind {
    fn for_class(class: u8) -> Self {
        match (class - 1) % 3 {
            0 => ShapeKind::Rectangle,
            1 => ShapeKind::Circle,
            _ => ShapeKind::Triangle,
        }
    }
}

/// Base colour of a class: hues spread by the golden angle.
fn class_color(class: u8) -> [f64; 3] {
    let hue = (class as f64 * 0.618_033_988_75).fract();
    let h6 = hue * 6.0;
    let x = 1.0 - (h6 % 2.0 - 1.0).abs();
    let (r, g, b) = match h6 as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [0.2 + 0.6 * r, 0.2 + 0.6 * g, 0.2 + 0.6 * b]
}

fn inside(kind: ShapeKind, x: f64, y: f64, x0: f64, y0: f64, w: f64, h: f64) -> bool {
    match kind {
        ShapeKind::Rectangle => x >= x0 && x < x0 + w && y >= y0 && y < y0 + h,
        ShapeKind::Circle => {
            let r = w.min(h) / 2.0;
            let (cx, cy) = (x0 + w / 2.0, y0 + h / 2.0);
            (x + 0.5 - cx).powi(2) + (y + 0.5 - cy).powi(2) <= r * r
        }
        ShapeKind::Triangle => {
            // Apex at top centre, base along the bottom edge.
            let t = (y + 0.5 - y0) / h;
            let half = t * w / 2.0;
            (0.0..=1.0).contains(&t) && (x + 0.5 - (x0 + w / 2.0)).abs() <= half
        }
    }
}

/// Generates `count` samples of `size x size` pixels over `n_classes` classes
/// (class 0 is background). Sample `i` depends only on `(seed, i)`.
pub fn synth_shapes(seed: u64, count: usize, size: usize, n_classes: usize) -> Result<Vec<Sample>> {
    if n_classes < 2 {
        return Err(Error::Config(format!(
            "need at least 2 classes (background + shapes), got {n_classes}"
        )));
    }
    if n_classes > 256 {
        return Err(Error::Config(format!(
            "class count {n_classes} does not fit 8-bit labels"
        )));
    }
    if size < MIN_IMAGE_SIZE {
        return Err(Error::Config(format!(
            "image size {size} too small to place a shape (minimum {MIN_IMAGE_SIZE})"
        )));
    }
    (0..count)
        .map(|i| synth_one(seed, i as u64, size, n_classes))
        .collect()
}

fn synth_one(seed: u64, index: u64, size: usize, n_classes: usize) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);

    let plane = size * size;
    let mut rgb = vec![0.0; 3 * plane];

    // Background: low-contrast stripes with a random orientation and tint.
    let (fx, fy) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6));
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.3..0.5));
    for y in 0..size {
        for x in 0..size {
            let stripe = 0.08 * (fx * x as f64 + fy * y as f64 + phase).sin();
            for c in 0..3 {
                rgb[c * plane + y * size + x] = tint[c] + stripe;
            }
        }
    }

    let mut labels = vec![0u8; plane];
    let mut instances = vec![0u16; plane];
    let n_shapes = rng.random_range(2..=6usize);
    let max_extent = (size / 2).max(MIN_SHAPE_EXTENT + 1);
    for k in 0..n_shapes {
        let class = rng.random_range(1..n_classes) as u8;
        let kind = ShapeKind::for_class(class);
        let w = rng.random_range(MIN_SHAPE_EXTENT..max_extent) as f64;
        let h = if kind == ShapeKind::Circle {
            w
        } else {
            rng.random_range(MIN_SHAPE_EXTENT..max_extent) as f64
        };
        let x0 = rng.random_range(0.0..=(size as f64 - w));
        let y0 = rng.random_range(0.0..=(size as f64 - h));
        let base = class_color(class);
        let color: [f64; 3] =
            std::array::from_fn(|c| base[c] + rng.random_range(-COLOR_JITTER..COLOR_JITTER));
        let id = (k + 1) as u16;
        for y in y0 as usize..((y0 + h).ceil() as usize).min(size) {
            for x in x0 as usize..((x0 + w).ceil() as usize).min(size) {
                if inside(kind, x as f64, y as f64, x0, y0, w, h) {
                    let p = y * size + x;
                    labels[p] = class;
                    instances[p] = id;
                    for c in 0..3 {
                        rgb[c * plane + p] = color[c];
                    }
                }
            }
        }
    }

    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    for v in rgb.iter_mut() {
        *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
    }

    Ok(Sample {
        image: Tensor::from_vec(Shape::new(1, 3, size, size), rgb)?,
        labels: LabelMap::new(size, size, n_classes, labels)?,
        instances: InstanceMap::new(size, size, instances)?,
    })
}
