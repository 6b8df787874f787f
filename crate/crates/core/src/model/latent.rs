use crate::error::{Axis, Error, Result};
use crate::targets::LabelMap;
use crate::tensor::Tensor;

/// Bottleneck feature vectors with the ground-truth class each one covers.
///
/// One point per bottleneck cell: the channel vector at that cell, tagged
/// with the majority class of the input pixel block it sees after pooling.
/// Ties go to the lowest class id.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDump {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub tags: Vec<u8>,
}

impl LatentDump {
    pub fn new(dim: usize) -> Self {
        LatentDump {
            dim,
            points: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Appends every cell of a `(n, c, h', w')` latent batch; `labels[i]` is
    /// the label map of sample `i`, whose size must be a multiple of `h'`.
    pub fn extend(&mut self, latent: &Tensor, labels: &[&LabelMap]) -> Result<()> {
        let s = latent.shape();
        Error::check(Axis::Batch, s.n, labels.len())?;
        Error::check(Axis::Channels, self.dim, s.c)?;
        for (i, lab) in labels.iter().enumerate() {
            if s.h == 0 || s.w == 0 || lab.height() % s.h != 0 || lab.width() % s.w != 0 {
                return Err(Error::dim(Axis::Height, s.h, lab.height()));
            }
            let (by, bx) = (lab.height() / s.h, lab.width() / s.w);
            let mut counts = vec![0usize; lab.n_classes()];
            for cy in 0..s.h {
                for cx in 0..s.w {
                    counts.fill(0);
                    for y in cy * by..(cy + 1) * by {
                        for x in cx * bx..(cx + 1) * bx {
                            counts[lab.get(x, y) as usize] += 1;
                        }
                    }
                    let tag = counts
                        .iter()
                        .enumerate()
                        .fold(
                            (0, 0),
                            |best, (c, &k)| if k > best.1 { (c, k) } else { best },
                        )
                        .0;
                    self.points
                        .push((0..s.c).map(|c| latent.at(i, c, cy, cx)).collect());
                    self.tags.push(tag as u8);
                }
            }
        }
        Ok(())
    }
}
