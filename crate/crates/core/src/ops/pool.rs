use crate::error::{Axis, Error, Result};
use crate::tensor::{Shape, Tensor};

/// Argmax positions recorded by [`maxpool2x2`].
///
/// One entry per pooled output element: the flat `y * w + x` index of the
/// winning pixel in the (un-pooled) input plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    pooled: Shape,
    indices: Vec<u32>,
}

impl PoolIndices {
    /// Shape of the pooled tensor these indices belong to.
    pub fn pooled_shape(&self) -> Shape {
        self.pooled
    }

    /// Shape of the input that was pooled.
    pub fn input_shape(&self) -> Shape {
        let s = self.pooled;
        Shape::new(s.n, s.c, s.h * 2, s.w * 2)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.indices
    }

    /// Builds indices from raw parts, checking every index lies inside its window.
    pub fn from_raw(pooled: Shape, indices: Vec<u32>) -> Result<Self> {
        Error::check(Axis::Length, pooled.numel(), indices.len())?;
        let p = PoolIndices { pooled, indices };
        let iw = pooled.w * 2;
        for (k, &idx) in p.indices.iter().enumerate() {
            let oy = (k / pooled.w) % pooled.h;
            let ox = k % pooled.w;
            let (iy, ix) = (idx as usize / iw, idx as usize % iw);
            if iy / 2 != oy || ix / 2 != ox || iy >= pooled.h * 2 {
                return Err(Error::Degenerate(format!(
                    "pool index {idx} at output ({oy},{ox}) falls outside its window"
                )));
            }
        }
        Ok(p)
    }
}

/// 2x2 max pooling with stride 2. Ties resolve to the lowest flat index.
pub fn maxpool2x2(input: &Tensor) -> Result<(Tensor, PoolIndices)> {
    let s = input.shape();
    if !s.h.is_multiple_of(2) {
        return Err(Error::dim(Axis::Height, s.h + 1, s.h));
    }
    if !s.w.is_multiple_of(2) {
        return Err(Error::dim(Axis::Width, s.w + 1, s.w));
    }
    let pooled = Shape::new(s.n, s.c, s.h / 2, s.w / 2);
    let mut out = Tensor::zeros(pooled);
    let mut indices = Vec::with_capacity(pooled.numel());
    let src = input.data();
    let (ip, op) = (s.plane(), pooled.plane());
    let dst = out.data_mut();
    for plane in 0..s.n * s.c {
        let base = plane * ip;
        for oy in 0..pooled.h {
            for ox in 0..pooled.w {
                let y0 = oy * 2;
                let x0 = ox * 2;
                let candidates = [
                    y0 * s.w + x0,
                    y0 * s.w + x0 + 1,
                    (y0 + 1) * s.w + x0,
                    (y0 + 1) * s.w + x0 + 1,
                ];
                let mut best = candidates[0];
                for &c in &candidates[1..] {
                    if src[base + c] > src[base + best] {
                        best = c;
                    }
                }
                dst[plane * op + oy * pooled.w + ox] = src[base + best];
                indices.push(best as u32);
            }
        }
    }
    Ok((out, PoolIndices { pooled, indices }))
}

/// Places each pooled value at its recorded argmax; zeros elsewhere.
pub fn maxunpool2x2(input: &Tensor, indices: &PoolIndices) -> Result<Tensor> {
    input.shape().expect(indices.pooled)?;
    let full = indices.input_shape();
    let mut out = Tensor::zeros(full);
    let (ip, op) = (full.plane(), indices.pooled.plane());
    let src = input.data();
    let dst = out.data_mut();
    for plane in 0..full.n * full.c {
        for k in 0..op {
            let j = plane * op + k;
            dst[plane * ip + indices.indices[j] as usize] = src[j];
        }
    }
    Ok(out)
}

/// Gradient of [`maxpool2x2`]: routes each upstream value back to its argmax.
pub fn maxpool2x2_backward(upstream: &Tensor, indices: &PoolIndices) -> Result<Tensor> {
    maxunpool2x2(upstream, indices)
}

/// Gradient of [`maxunpool2x2`]: gathers the upstream value at each argmax.
pub fn maxunpool2x2_backward(upstream: &Tensor, indices: &PoolIndices) -> Result<Tensor> {
    upstream.shape().expect(indices.input_shape())?;
    let pooled = indices.pooled;
    let mut out = Tensor::zeros(pooled);
    let (ip, op) = (upstream.shape().plane(), pooled.plane());
    let src = upstream.data();
    let dst = out.data_mut();
    for plane in 0..pooled.n * pooled.c {
        for k in 0..op {
            let j = plane * op + k;
            dst[j] = src[plane * ip + indices.indices[j] as usize];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::GradCheck;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn picks_window_max() {
        let x = Tensor::from_vec(Shape::new(1, 1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, idx) = maxpool2x2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(idx.as_slice(), &[3]);
    }

    #[test]
    fn ties_resolve_to_first_position() {
        let x = Tensor::full(Shape::new(1, 2, 4, 4), 0.5);
        let (y, idx) = maxpool2x2(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.5));
        // Top-left corner of each window in a 4-wide plane.
        assert_eq!(&idx.as_slice()[..4], &[0, 2, 8, 10]);
    }

    #[test]
    fn odd_extent_is_rejected() {
        let x = Tensor::zeros(Shape::new(1, 1, 3, 4));
        assert!(matches!(
            maxpool2x2(&x),
            Err(Error::Dimension {
                axis: Axis::Height,
                ..
            })
        ));
        let x = Tensor::zeros(Shape::new(1, 1, 4, 5));
        assert!(matches!(
            maxpool2x2(&x),
            Err(Error::Dimension {
                axis: Axis::Width,
                ..
            })
        ));
    }

    #[test]
    fn matches_naive_window_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Tensor::random_uniform(Shape::new(1, 1, 6, 6), -1.0, 1.0, &mut rng);
        let (y, idx) = maxpool2x2(&x).unwrap();
        for oy in 0..3 {
            for ox in 0..3 {
                let mut best = (f64::NEG_INFINITY, 0);
                for dy in 0..2 {
                    for dx in 0..2 {
                        let v = x.at(0, 0, oy * 2 + dy, ox * 2 + dx);
                        if v > best.0 {
                            best = (v, (oy * 2 + dy) * 6 + ox * 2 + dx);
                        }
                    }
                }
                assert_eq!(y.at(0, 0, oy, ox), best.0);
                assert_eq!(idx.as_slice()[oy * 3 + ox] as usize, best.1);
            }
        }
        assert!(PoolIndices::from_raw(idx.pooled_shape(), idx.as_slice().to_vec()).is_ok());
    }

    #[test]
    fn unpool_roundtrip_keeps_one_max_per_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Tensor::random_uniform(Shape::new(2, 3, 8, 6), 0.1, 1.0, &mut rng);
        let (y, idx) = maxpool2x2(&x).unwrap();
        let u = maxunpool2x2(&y, &idx).unwrap();
        assert_eq!(u.shape(), x.shape());
        for n in 0..2 {
            for c in 0..3 {
                for oy in 0..4 {
                    for ox in 0..3 {
                        let mut nonzero = 0;
                        let mut max = f64::NEG_INFINITY;
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let v = u.at(n, c, oy * 2 + dy, ox * 2 + dx);
                                if v != 0.0 {
                                    nonzero += 1;
                                    assert_eq!(v, y.at(n, c, oy, ox));
                                }
                                max = max.max(x.at(n, c, oy * 2 + dy, ox * 2 + dx));
                            }
                        }
                        assert_eq!(nonzero, 1);
                        assert_eq!(y.at(n, c, oy, ox), max);
                    }
                }
            }
        }
    }

    #[test]
    fn unpool_of_zeros_is_zero_and_conserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Tensor::random_uniform(Shape::new(1, 2, 4, 4), -1.0, 1.0, &mut rng);
        let (y, idx) = maxpool2x2(&x).unwrap();
        let z = maxunpool2x2(&Tensor::zeros(y.shape()), &idx).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));

        let v = Tensor::random_uniform(y.shape(), -1.0, 1.0, &mut rng);
        let u = maxunpool2x2(&v, &idx).unwrap();
        let direct: f64 = v.data().iter().sum();
        assert!((u.sum() - direct).abs() < 1e-12);
    }

    #[test]
    fn unpool_rejects_mismatched_indices() {
        let (_, idx) = maxpool2x2(&Tensor::zeros(Shape::new(1, 1, 4, 4))).unwrap();
        let wrong = Tensor::zeros(Shape::new(1, 1, 3, 2));
        assert!(maxunpool2x2(&wrong, &idx).is_err());
        assert!(PoolIndices::from_raw(Shape::new(1, 1, 1, 1), vec![5]).is_err());
    }

    #[test]
    fn backward_kernels_match_finite_differences() {
        let checker = GradCheck::default();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let x = Tensor::random_uniform(Shape::new(1, 2, 4, 6), -1.0, 1.0, &mut rng);
            let (y, idx) = maxpool2x2(&x).unwrap();
            let r = Tensor::random_uniform(y.shape(), -1.0, 1.0, &mut rng);
            let gx = maxpool2x2_backward(&r, &idx).unwrap();
            let report = checker
                .check(
                    |p| {
                        maxpool2x2(&Tensor::from_vec(x.shape(), p.to_vec()).unwrap())
                            .unwrap()
                            .0
                            .dot(&r)
                            .unwrap()
                    },
                    x.data(),
                    gx.data(),
                )
                .unwrap();
            assert!(report.pass, "pool seed {seed}: {report:?}");

            let r_full = Tensor::random_uniform(x.shape(), -1.0, 1.0, &mut rng);
            let gy = maxunpool2x2_backward(&r_full, &idx).unwrap();
            let report = checker
                .check(
                    |p| {
                        let v = Tensor::from_vec(y.shape(), p.to_vec()).unwrap();
                        maxunpool2x2(&v, &idx).unwrap().dot(&r_full).unwrap()
                    },
                    y.data(),
                    gy.data(),
                )
                .unwrap();
            assert!(report.pass, "unpool seed {seed}: {report:?}");
        }
    }
}
