use crate::edt::squared_distance_to_seeds;
use crate::error::{Axis, Error, Result};
use crate::targets::LabelMap;

/// Pixels within a Euclidean distance of the ground-truth class contours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimapBand {
    pub width: u32,
    pub members: Vec<bool>,
}

impl TrimapBand {
    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset_of(&self, other: &TrimapBand) -> bool {
        self.members
            .iter()
            .zip(&other.members)
            .all(|(&a, &b)| !a || b)
    }
}

/// Pixels with a 4-neighbour of a different class.
pub fn class_contours(gt: &LabelMap) -> Vec<bool> {
    let (w, h) = (gt.width(), gt.height());
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let c = gt.get(x, y);
            out[y * w + x] = (x > 0 && gt.get(x - 1, y) != c)
                || (x + 1 < w && gt.get(x + 1, y) != c)
                || (y > 0 && gt.get(x, y - 1) != c)
                || (y + 1 < h && gt.get(x, y + 1) != c);
        }
    }
    out
}

/// Squared distance of every pixel to the nearest class contour.
pub fn contour_distances(gt: &LabelMap) -> Vec<Option<u64>> {
    squared_distance_to_seeds(&class_contours(gt), gt.width(), gt.height())
}

fn band_from(distances: &[Option<u64>], width: u32) -> TrimapBand {
    let r2 = width as u64 * width as u64;
    TrimapBand {
        width,
        members: distances
            .iter()
            .map(|d| d.is_some_and(|d| d <= r2))
            .collect(),
    }
}

pub fn trimap_band(gt: &LabelMap, width: u32) -> Result<TrimapBand> {
    if width == 0 {
        return Err(Error::Config("trimap width must be at least 1".into()));
    }
    Ok(band_from(&contour_distances(gt), width))
}

/// Misclassified and total band pixels per width, summed over images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrimapTally {
    pub widths: Vec<u32>,
    pub wrong: Vec<u64>,
    pub band: Vec<u64>,
}

/// One point of a trimap curve; `error_pct` is `None` for an empty band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimapPoint {
    pub width: u32,
    pub error_pct: Option<f64>,
}

impl TrimapTally {
    pub fn new(widths: &[u32]) -> Result<Self> {
        if widths.contains(&0) {
            return Err(Error::Config("trimap width must be at least 1".into()));
        }
        Ok(TrimapTally {
            widths: widths.to_vec(),
            wrong: vec![0; widths.len()],
            band: vec![0; widths.len()],
        })
    }

    pub fn accumulate(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<()> {
        Error::check(Axis::Width, gt.width(), pred.width())?;
        Error::check(Axis::Height, gt.height(), pred.height())?;
        let dist = contour_distances(gt);
        for (k, &w) in self.widths.iter().enumerate() {
            let band = band_from(&dist, w);
            for ((&inside, &p), &g) in band.members.iter().zip(pred.ids()).zip(gt.ids()) {
                if inside {
                    self.band[k] += 1;
                    self.wrong[k] += (p != g) as u64;
                }
            }
        }
        Ok(())
    }

    pub fn curve(&self) -> Vec<TrimapPoint> {
        self.widths
            .iter()
            .zip(self.wrong.iter().zip(&self.band))
            .map(|(&width, (&wrong, &band))| TrimapPoint {
                width,
                error_pct: (band > 0).then(|| 100.0 * wrong as f64 / band as f64),
            })
            .collect()
    }
}

/// Percentage of misclassified pixels inside the band of each width.
pub fn trimap_curve(pred: &LabelMap, gt: &LabelMap, widths: &[u32]) -> Result<Vec<TrimapPoint>> {
    let mut tally = TrimapTally::new(widths)?;
    tally.accumulate(pred, gt)?;
    Ok(tally.curve())
}
