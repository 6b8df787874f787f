use crate::error::{Axis, Error, Result};
use crate::tensor::{Shape, Tensor};

/// Class id reserved for "no object" in label maps and contour maps.
pub const BACKGROUND_CLASS: u8 = 0;

fn crop_rows<T: Copy>(
    data: &[T],
    width: usize,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
) -> Vec<T> {
    let mut out = Vec::with_capacity(w * h);
    for y in y0..y0 + h {
        out.extend_from_slice(&data[y * width + x0..y * width + x0 + w]);
    }
    out
}

fn flip_rows<T: Copy>(data: &[T], width: usize) -> Vec<T> {
    let mut out = data.to_vec();
    for row in out.chunks_mut(width.max(1)) {
        row.reverse();
    }
    out
}

fn check_crop(width: usize, height: usize, x0: usize, y0: usize, w: usize, h: usize) -> Result<()> {
    if x0 + w > width {
        return Err(Error::dim(Axis::Width, width, x0 + w));
    }
    if y0 + h > height {
        return Err(Error::dim(Axis::Height, height, y0 + h));
    }
    Ok(())
}

/// Per-pixel class ids in `[0, n_classes)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    n_classes: usize,
    ids: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, n_classes: usize, ids: Vec<u8>) -> Result<Self> {
        Error::check(Axis::Length, width * height, ids.len())?;
        if n_classes == 0 || n_classes > 256 {
            return Err(Error::Config(format!(
                "class count {n_classes} outside 1..=256"
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= n_classes) {
            return Err(Error::Config(format!(
                "label id {bad} not below class count {n_classes}"
            )));
        }
        Ok(LabelMap {
            width,
            height,
            n_classes,
            ids,
        })
    }

    pub fn filled(width: usize, height: usize, n_classes: usize, id: u8) -> Result<Self> {
        Self::new(width, height, n_classes, vec![id; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.ids[y * self.width + x]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn classes_present(&self) -> Vec<bool> {
        let mut present = vec![false; self.n_classes];
        for &id in &self.ids {
            present[id as usize] = true;
        }
        present
    }

    /// Fails unless `other` covers the same pixel grid.
    pub fn same_grid(&self, width: usize, height: usize) -> Result<()> {
        Error::check(Axis::Width, self.width, width)?;
        Error::check(Axis::Height, self.height, height)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<LabelMap> {
        check_crop(self.width, self.height, x0, y0, w, h)?;
        Ok(LabelMap {
            width: w,
            height: h,
            n_classes: self.n_classes,
            ids: crop_rows(&self.ids, self.width, x0, y0, w, h),
        })
    }

    pub fn flip_horizontal(&self) -> LabelMap {
        LabelMap {
            ids: flip_rows(&self.ids, self.width),
            ..self.clone()
        }
    }

    /// One-hot planes as a `(1, n_classes, h, w)` tensor.
    pub fn one_hot(&self) -> Tensor {
        let mut t = Tensor::zeros(Shape::new(1, self.n_classes, self.height, self.width));
        let plane = self.width * self.height;
        let data = t.data_mut();
        for (p, &id) in self.ids.iter().enumerate() {
            data[id as usize * plane + p] = 1.0;
        }
        t
    }
}

/// Per-pixel instance ids; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMap {
    width: usize,
    height: usize,
    ids: Vec<u16>,
}

impl InstanceMap {
    pub fn new(width: usize, height: usize, ids: Vec<u16>) -> Result<Self> {
        Error::check(Axis::Length, width * height, ids.len())?;
        Ok(InstanceMap { width, height, ids })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        InstanceMap {
            width,
            height,
            ids: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ids(&self) -> &[u16] {
        &self.ids
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.ids[y * self.width + x]
    }

    pub fn has_foreground(&self) -> bool {
        self.ids.iter().any(|&id| id != 0)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<InstanceMap> {
        check_crop(self.width, self.height, x0, y0, w, h)?;
        Ok(InstanceMap {
            width: w,
            height: h,
            ids: crop_rows(&self.ids, self.width, x0, y0, w, h),
        })
    }

    pub fn flip_horizontal(&self) -> InstanceMap {
        InstanceMap {
            ids: flip_rows(&self.ids, self.width),
            ..self.clone()
        }
    }
}

/// Boolean per-pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        Error::check(Axis::Length, width * height, mask.len())?;
        Ok(EdgeMap {
            width,
            height,
            mask,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        EdgeMap {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &EdgeMap) -> bool {
        self.mask.len() == other.mask.len()
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<EdgeMap> {
        check_crop(self.width, self.height, x0, y0, w, h)?;
        Ok(EdgeMap {
            width: w,
            height: h,
            mask: crop_rows(&self.mask, self.width, x0, y0, w, h),
        })
    }

    pub fn flip_horizontal(&self) -> EdgeMap {
        EdgeMap {
            mask: flip_rows(&self.mask, self.width),
            ..self.clone()
        }
    }

    /// The mask as a `(1, 1, h, w)` tensor of zeros and ones.
    pub fn to_tensor(&self) -> Tensor {
        let data = self
            .mask
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        Tensor::from_vec(Shape::new(1, 1, self.height, self.width), data)
            .expect("mask length matches grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_ids_must_fit_class_count() {
        assert!(LabelMap::new(2, 1, 2, vec![0, 2]).is_err());
        assert!(LabelMap::new(2, 1, 3, vec![0, 2]).is_ok());
        assert!(LabelMap::new(2, 2, 3, vec![0, 2]).is_err());
    }

    #[test]
    fn crop_and_flip() {
        let m = LabelMap::new(3, 2, 6, vec![0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(m.crop(1, 0, 2, 2).unwrap().ids(), &[1, 2, 4, 5]);
        assert_eq!(m.flip_horizontal().ids(), &[2, 1, 0, 5, 4, 3]);
        assert!(m.crop(2, 0, 2, 2).is_err());
        let oh = m.one_hot();
        assert_eq!(oh.at(0, 4, 1, 1), 1.0);
        assert_eq!(oh.sum(), 6.0);
    }
}
