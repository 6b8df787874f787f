use crate::error::Result;
use crate::tensor::Tensor;

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn relu(input: &Tensor) -> Tensor {
    input.map(|v| v.max(0.0))
}

/// Passes `upstream` where the forward input was strictly positive.
pub fn relu_backward(input: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    input.shape().expect(upstream.shape())?;
    let mut out = upstream.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(input.data()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(out)
}

pub fn sigmoid(input: &Tensor) -> Tensor {
    input.map(sigmoid_scalar)
}

/// Takes the cached forward *output* `s` and returns `upstream * s * (1 - s)`.
pub fn sigmoid_backward(output: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    output.shape().expect(upstream.shape())?;
    let mut out = upstream.clone();
    for (g, &s) in out.data_mut().iter_mut().zip(output.data()) {
        *g *= s * (1.0 - s);
    }
    Ok(out)
}
