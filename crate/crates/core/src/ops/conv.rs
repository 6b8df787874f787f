use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Axis, Error, Result};
use crate::tensor::{Shape, Tensor};

/// Zero padding applied to each border before the kernel slides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Padding {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Padding {
    pub const fn uniform(p: usize) -> Self {
        Padding {
            top: p,
            bottom: p,
            left: p,
            right: p,
        }
    }

    /// Output-preserving padding for a stride-1 kernel of extent `k`.
    ///
    /// Even kernels cannot pad symmetrically: this pads `k/2` before and
    /// `k/2 - 1` after, which is the same as padding `k/2` on both sides and
    /// cropping the trailing row and column.
    pub const fn same(k: usize) -> Self {
        let before = k / 2;
        let after = (k - 1) - before;
        Padding {
            top: before,
            bottom: after,
            left: before,
            right: after,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Conv2dGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    in_c: usize,
    out_c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    pad: Padding,
}

impl Geometry {
    fn new(
        input: Shape,
        weight: Shape,
        bias_len: usize,
        stride: usize,
        pad: Padding,
    ) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Config("convolution stride must be positive".into()));
        }
        Error::check(Axis::Channels, weight.c, input.c)?;
        Error::check(Axis::Channels, weight.n, bias_len)?;
        let padded_h = input.h + pad.top + pad.bottom;
        let padded_w = input.w + pad.left + pad.right;
        if padded_h < weight.h || weight.h == 0 {
            return Err(Error::dim(Axis::Height, weight.h, padded_h));
        }
        if padded_w < weight.w || weight.w == 0 {
            return Err(Error::dim(Axis::Width, weight.w, padded_w));
        }
        Ok(Geometry {
            in_c: input.c,
            out_c: weight.n,
            h: input.h,
            w: input.w,
            kh: weight.h,
            kw: weight.w,
            oh: (padded_h - weight.h) / stride + 1,
            ow: (padded_w - weight.w) / stride + 1,
            stride,
            pad,
        })
    }

    fn out_shape(&self, n: usize) -> Shape {
        Shape::new(n, self.out_c, self.oh, self.ow)
    }

    fn rows(&self, ky: usize) -> Range<usize> {
        valid_range(ky, self.pad.top, self.stride, self.h, self.oh)
    }

    fn cols(&self, kx: usize) -> Range<usize> {
        valid_range(kx, self.pad.left, self.stride, self.w, self.ow)
    }

    fn weight_index(&self, co: usize, ci: usize, ky: usize, kx: usize) -> usize {
        ((co * self.in_c + ci) * self.kh + ky) * self.kw + kx
    }
}

/// Output positions `o` whose input coordinate `o*stride + k - pad` lies in `[0, in_len)`.
fn valid_range(k: usize, pad: usize, stride: usize, in_len: usize, out_len: usize) -> Range<usize> {
    let lo = if pad > k {
        (pad - k).div_ceil(stride)
    } else {
        0
    };
    let hi = if in_len + pad > k {
        ((in_len + pad - k - 1) / stride + 1).min(out_len)
    } else {
        0
    };
    lo..hi.max(lo)
}

#[inline]
fn axpy(dst: &mut [f64], src: &[f64], a: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

/// Dot product with four interleaved partial sums, combined in a fixed order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// Cross-correlation of `input` (n, in_c, h, w) with `weight` (out_c, in_c, kh, kw)
/// plus a per-output-channel bias, with symmetric zero padding.
pub fn conv2d_forward(
    input: &Tensor,
    weight: &Tensor,
    bias: &[f64],
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    conv2d_forward_padded(input, weight, bias, stride, Padding::uniform(pad))
}

pub fn conv2d_forward_padded(
    input: &Tensor,
    weight: &Tensor,
    bias: &[f64],
    stride: usize,
    pad: Padding,
) -> Result<Tensor> {
    let g = Geometry::new(input.shape(), weight.shape(), bias.len(), stride, pad)?;
    let n = input.shape().n;
    let mut out = Tensor::zeros(g.out_shape(n));
    let out_len = g.out_c * g.oh * g.ow;
    if out_len == 0 {
        return Ok(out);
    }
    let in_len = g.in_c * g.h * g.w;
    let wdata = weight.data();
    out.data_mut()
        .par_chunks_mut(out_len)
        .enumerate()
        .for_each(|(i, dst)| {
            forward_sample(
                &g,
                &input.data()[i * in_len..(i + 1) * in_len],
                wdata,
                bias,
                dst,
            )
        });
    Ok(out)
}

fn forward_sample(g: &Geometry, input: &[f64], weight: &[f64], bias: &[f64], out: &mut [f64]) {
    let (ip, op) = (g.h * g.w, g.oh * g.ow);
    for co in 0..g.out_c {
        let out_plane = &mut out[co * op..(co + 1) * op];
        out_plane.fill(bias[co]);
        for ci in 0..g.in_c {
            let in_plane = &input[ci * ip..(ci + 1) * ip];
            for ky in 0..g.kh {
                let rows = g.rows(ky);
                for kx in 0..g.kw {
                    let wv = weight[g.weight_index(co, ci, ky, kx)];
                    let cols = g.cols(kx);
                    if cols.is_empty() {
                        continue;
                    }
                    for oy in rows.clone() {
                        let iy = oy * g.stride + ky - g.pad.top;
                        let orow = &mut out_plane[oy * g.ow..(oy + 1) * g.ow];
                        let irow = &in_plane[iy * g.w..(iy + 1) * g.w];
                        if g.stride == 1 {
                            let ix0 = cols.start + kx - g.pad.left;
                            axpy(&mut orow[cols.clone()], &irow[ix0..ix0 + cols.len()], wv);
                        } else {
                            for ox in cols.clone() {
                                orow[ox] += wv * irow[ox * g.stride + kx - g.pad.left];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Gradients of [`conv2d_forward`] with respect to input, weight and bias.
pub fn conv2d_backward(
    input: &Tensor,
    weight: &Tensor,
    upstream: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<Conv2dGrads> {
    conv2d_backward_padded(input, weight, upstream, stride, Padding::uniform(pad))
}

pub fn conv2d_backward_padded(
    input: &Tensor,
    weight: &Tensor,
    upstream: &Tensor,
    stride: usize,
    pad: Padding,
) -> Result<Conv2dGrads> {
    let g = Geometry::new(input.shape(), weight.shape(), weight.shape().n, stride, pad)?;
    let n = input.shape().n;
    upstream.shape().expect(g.out_shape(n))?;

    let in_len = g.in_c * g.h * g.w;
    let out_len = g.out_c * g.oh * g.ow;
    let wlen = weight.len();
    let mut grad_input = Tensor::zeros(input.shape());
    if in_len == 0 {
        return Ok(Conv2dGrads {
            input: grad_input,
            weight: Tensor::zeros(weight.shape()),
            bias: vec![0.0; g.out_c],
        });
    }

    let partials: Vec<(Vec<f64>, Vec<f64>)> = grad_input
        .data_mut()
        .par_chunks_mut(in_len)
        .enumerate()
        .map(|(i, gin)| {
            let x = &input.data()[i * in_len..(i + 1) * in_len];
            let up = &upstream.data()[i * out_len..(i + 1) * out_len];
            backward_sample(&g, x, weight.data(), up, gin, wlen)
        })
        .collect();

    let mut gw = vec![0.0; wlen];
    let mut gb = vec![0.0; g.out_c];
    for (pw, pb) in &partials {
        for (a, b) in gw.iter_mut().zip(pw) {
            *a += b;
        }
        for (a, b) in gb.iter_mut().zip(pb) {
            *a += b;
        }
    }
    Ok(Conv2dGrads {
        input: grad_input,
        weight: Tensor::from_vec(weight.shape(), gw)?,
        bias: gb,
    })
}

fn backward_sample(
    g: &Geometry,
    input: &[f64],
    weight: &[f64],
    upstream: &[f64],
    grad_in: &mut [f64],
    wlen: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (ip, op) = (g.h * g.w, g.oh * g.ow);
    let mut gw = vec![0.0; wlen];
    let mut gb = vec![0.0; g.out_c];
    for co in 0..g.out_c {
        let up_plane = &upstream[co * op..(co + 1) * op];
        gb[co] = up_plane.iter().sum();
        for ci in 0..g.in_c {
            let in_plane = &input[ci * ip..(ci + 1) * ip];
            let gin_plane = &mut grad_in[ci * ip..(ci + 1) * ip];
            for ky in 0..g.kh {
                let rows = g.rows(ky);
                for kx in 0..g.kw {
                    let widx = g.weight_index(co, ci, ky, kx);
                    let wv = weight[widx];
                    let cols = g.cols(kx);
                    if cols.is_empty() {
                        continue;
                    }
                    let mut acc = 0.0;
                    for oy in rows.clone() {
                        let iy = oy * g.stride + ky - g.pad.top;
                        let urow = &up_plane[oy * g.ow..(oy + 1) * g.ow];
                        if g.stride == 1 {
                            let ix0 = cols.start + kx - g.pad.left;
                            let span = ix0..ix0 + cols.len();
                            acc += dot(&urow[cols.clone()], &in_plane[iy * g.w..][span.clone()]);
                            axpy(&mut gin_plane[iy * g.w..][span], &urow[cols.clone()], wv);
                        } else {
                            for ox in cols.clone() {
                                let ix = ox * g.stride + kx - g.pad.left;
                                acc += urow[ox] * in_plane[iy * g.w + ix];
                                gin_plane[iy * g.w + ix] += wv * urow[ox];
                            }
                        }
                    }
                    gw[widx] = acc;
                }
            }
        }
    }
    (gw, gb)
}
