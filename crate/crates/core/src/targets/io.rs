//! Raster files and the dataset manifest.
//!
//! Label maps are 8-bit grayscale PNGs, instance maps 16-bit grayscale PNGs,
//! images 8-bit RGB PNGs. The manifest is one `image<TAB>labels<TAB>instances`
//! record per line; relative paths resolve against the manifest's directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma, RgbImage};

use super::maps::{EdgeMap, InstanceMap, LabelMap};
use super::synth::Sample;
use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

pub fn write_label_png(path: &Path, labels: &LabelMap) -> Result<()> {
    let img = GrayImage::from_raw(
        labels.width() as u32,
        labels.height() as u32,
        labels.ids().to_vec(),
    )
    .expect("buffer matches dimensions");
    img.save(path)?;
    Ok(())
}

/// Reads an 8-bit label raster. Ids must be below `n_classes`.
pub fn read_label_png(path: &Path, n_classes: usize) -> Result<LabelMap> {
    let img = image::open(path)?;
    if !matches!(img.color(), image::ColorType::L8) {
        return Err(Error::Format(format!(
            "{}: label maps must be 8-bit grayscale",
            path.display()
        )));
    }
    let img = img.into_luma8();
    LabelMap::new(
        img.width() as usize,
        img.height() as usize,
        n_classes,
        img.into_raw(),
    )
}

pub fn write_instance_png(path: &Path, instances: &InstanceMap) -> Result<()> {
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(
        instances.width() as u32,
        instances.height() as u32,
        instances.ids().to_vec(),
    )
    .expect("buffer matches dimensions");
    img.save(path)?;
    Ok(())
}

pub fn read_instance_png(path: &Path) -> Result<InstanceMap> {
    let img = image::open(path)?;
    if !matches!(img.color(), image::ColorType::L16) {
        return Err(Error::Format(format!(
            "{}: instance maps must be 16-bit grayscale",
            path.display()
        )));
    }
    let img = img.into_luma16();
    InstanceMap::new(img.width() as usize, img.height() as usize, img.into_raw())
}

/// Writes an edge mask as 0/255 8-bit grayscale.
pub fn write_mask_png(path: &Path, mask: &EdgeMap) -> Result<()> {
    let data = mask
        .mask()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, data)
        .expect("buffer matches dimensions");
    img.save(path)?;
    Ok(())
}

/// Writes a `(1, 3, h, w)` image tensor with values in `[0, 1]` as 8-bit RGB.
pub fn write_image_png(path: &Path, image: &Tensor) -> Result<()> {
    let s = image.shape();
    if s.n != 1 || s.c != 3 {
        return Err(Error::Format(format!("expected a 1x3xHxW image, got {s}")));
    }
    let mut buf = Vec::with_capacity(s.plane() * 3);
    for p in 0..s.plane() {
        for c in 0..3 {
            buf.push((image.plane(0, c)[p].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    RgbImage::from_raw(s.w as u32, s.h as u32, buf)
        .expect("buffer matches dimensions")
        .save(path)?;
    Ok(())
}

pub fn read_image_png(path: &Path) -> Result<Tensor> {
    let img = image::open(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut t = Tensor::zeros(Shape::new(1, 3, h, w));
    for (p, px) in img.pixels().enumerate() {
        for c in 0..3 {
            t.plane_mut(0, c)[p] = px.0[c] as f64 / 255.0;
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image: PathBuf,
    pub labels: PathBuf,
    pub instances: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!(
                "{}:{}: expected 3 tab-separated fields, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let resolve = |f: &str| {
            let p = PathBuf::from(f);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        out.push(ManifestRecord {
            image: resolve(fields[0]),
            labels: resolve(fields[1]),
            instances: resolve(fields[2]),
        });
    }
    Ok(out)
}

/// Writes records with paths relative to the manifest directory where possible.
pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let base = path.parent().unwrap_or(Path::new(""));
    let rel = |p: &Path| p.strip_prefix(base).unwrap_or(p).display().to_string();
    let mut f = fs::File::create(path)?;
    for r in records {
        writeln!(
            f,
            "{}\t{}\t{}",
            rel(&r.image),
            rel(&r.labels),
            rel(&r.instances)
        )?;
    }
    Ok(())
}

/// Loads every record of a manifest. With `n_classes = None` the class count
/// is one past the largest label id in the dataset.
pub fn load_dataset(manifest: &Path, n_classes: Option<usize>) -> Result<Vec<Sample>> {
    let records = read_manifest(manifest)?;
    let mut raw = Vec::with_capacity(records.len());
    let mut max_id = 0u8;
    for r in &records {
        let labels = read_label_png(&r.labels, 256)?;
        max_id = max_id.max(labels.ids().iter().copied().max().unwrap_or(0));
        raw.push((
            read_image_png(&r.image)?,
            labels,
            read_instance_png(&r.instances)?,
        ));
    }
    let n = n_classes.unwrap_or(max_id as usize + 1);
    raw.into_iter()
        .map(|(image, labels, instances)| {
            let labels = LabelMap::new(labels.width(), labels.height(), n, labels.ids().to_vec())?;
            let s = image.shape();
            labels.same_grid(s.w, s.h)?;
            labels.same_grid(instances.width(), instances.height())?;
            Ok(Sample {
                image,
                labels,
                instances,
            })
        })
        .collect()
}

/// Writes samples as `image_NNNN.png`, `labels_NNNN.png`, `instances_NNNN.png`
/// plus `manifest.tsv` under `dir`, returning the manifest path.
pub fn write_dataset(dir: &Path, samples: &[Sample]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut records = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let rec = ManifestRecord {
            image: dir.join(format!("image_{i:04}.png")),
            labels: dir.join(format!("labels_{i:04}.png")),
            instances: dir.join(format!("instances_{i:04}.png")),
        };
        write_image_png(&rec.image, &s.image)?;
        write_label_png(&rec.labels, &s.labels)?;
        write_instance_png(&rec.instances, &s.instances)?;
        records.push(rec);
    }
    let manifest = dir.join("manifest.tsv");
    write_manifest(&manifest, &records)?;
    Ok(manifest)
}
