use super::maps::{EdgeMap, InstanceMap, LabelMap, BACKGROUND_CLASS};
use crate::error::Result;

/// Radius of the disk used to thicken raw boundaries.
pub const EDGE_DILATION_RADIUS: usize = 2;

/// Pixels with a 4-neighbour (up, down, left, right) carrying a different
/// instance id. Neighbours outside the image are ignored.
pub fn raw_boundary(instances: &InstanceMap) -> EdgeMap {
    let (w, h) = (instances.width(), instances.height());
    let ids = instances.ids();
    let mut mask = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let id = ids[y * w + x];
            let differs = (x > 0 && ids[y * w + x - 1] != id)
                || (x + 1 < w && ids[y * w + x + 1] != id)
                || (y > 0 && ids[(y - 1) * w + x] != id)
                || (y + 1 < h && ids[(y + 1) * w + x] != id);
            mask[y * w + x] = differs;
        }
    }
    EdgeMap::new(w, h, mask).expect("mask covers grid")
}

/// Offsets `(dx, dy)` with `dx^2 + dy^2 <= r^2`.
pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Morphological dilation by a disk of the given radius.
pub fn dilate_disk(edges: &EdgeMap, radius: usize) -> EdgeMap {
    let (w, h) = (edges.width() as isize, edges.height() as isize);
    let disk = disk_offsets(radius);
    let mut mask = vec![false; edges.mask().len()];
    for (i, _) in edges.mask().iter().enumerate().filter(|(_, &b)| b) {
        let (x, y) = ((i as isize) % w, (i as isize) / w);
        for &(dx, dy) in &disk {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                mask[(ny * w + nx) as usize] = true;
            }
        }
    }
    EdgeMap::new(edges.width(), edges.height(), mask).expect("mask covers grid")
}

/// Instance boundaries thickened by the radius-2 disk.
pub fn extract_edges(instances: &InstanceMap) -> EdgeMap {
    dilate_disk(&raw_boundary(instances), EDGE_DILATION_RADIUS)
}

/// Class ids on edge pixels, [`BACKGROUND_CLASS`] elsewhere.
pub fn extract_semantic_contours(labels: &LabelMap, edges: &EdgeMap) -> Result<LabelMap> {
    labels.same_grid(edges.width(), edges.height())?;
    let ids = labels
        .ids()
        .iter()
        .zip(edges.mask())
        .map(|(&id, &e)| if e { id } else { BACKGROUND_CLASS })
        .collect();
    LabelMap::new(labels.width(), labels.height(), labels.n_classes(), ids)
}
