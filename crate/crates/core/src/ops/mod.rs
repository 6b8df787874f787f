//! Differentiable layer kernels.
//!
//! Every kernel accumulates in a fixed order, so forward and backward results
//! are bit-identical across runs and thread counts. Batch samples may be
//! processed in parallel; cross-sample reductions always run in sample order.

mod activation;
mod conv;
mod pool;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use conv::{
    conv2d_backward, conv2d_backward_padded, conv2d_forward, conv2d_forward_padded, Conv2dGrads,
    Padding,
};
pub use pool::{maxpool2x2, maxpool2x2_backward, maxunpool2x2, maxunpool2x2_backward, PoolIndices};
