use super::config::HEAD_KERNEL;
use super::params::{Conv, Head, ModelParams, ParamGrads, Trunk};
use crate::error::{Axis, Error, Result};
use crate::ops::{
    conv2d_backward, conv2d_backward_padded, conv2d_forward, conv2d_forward_padded, maxpool2x2,
    maxpool2x2_backward, maxunpool2x2, maxunpool2x2_backward, relu, relu_backward, Padding,
    PoolIndices,
};
use crate::task::{PerTask, Task, TaskSet};
use crate::tensor::{Shape, Tensor};

const TRUNK_PAD: usize = 1;

/// Intermediates kept by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    tasks: TaskSet,
    batch: usize,
    enc_in: Vec<Tensor>,
    enc_pre: Vec<Tensor>,
    indices: Vec<PoolIndices>,
    bott_in: Tensor,
    bott_pre: Tensor,
    dec_in: Vec<Tensor>,
    dec_pre: Vec<Tensor>,
    features: Tensor,
    head_pre: PerTask<Option<Tensor>>,
    head_act: PerTask<Option<Tensor>>,
}

impl ForwardCache {
    pub fn tasks(&self) -> TaskSet {
        self.tasks
    }

    /// Shared decoder output fed to every head.
    pub fn features(&self) -> &Tensor {
        &self.features
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// `(n, depth_t, size, size)` logits for every requested task.
    pub logits: PerTask<Option<Tensor>>,
    /// Post-ReLU bottleneck activations when requested.
    pub latent: Option<Tensor>,
    pub cache: ForwardCache,
}

fn conv3(x: &Tensor, c: &Conv) -> Result<Tensor> {
    conv2d_forward(x, &c.weight, &c.bias, 1, TRUNK_PAD)
}

/// Runs the trunk and the heads in `tasks` on `(n, in_channels, h, w)` images.
///
/// `h` and `w` must be positive multiples of `2^stages`; they need not equal
/// the training size, so a model trained on crops runs on full images.
pub fn forward(
    params: &ModelParams,
    images: &Tensor,
    tasks: TaskSet,
    capture_latent: bool,
) -> Result<ForwardOutput> {
    let cfg = params.config;
    let s = images.shape();
    Error::check(Axis::Channels, cfg.in_channels, s.c)?;
    let factor = 1usize << cfg.stages;
    for (axis, extent) in [(Axis::Height, s.h), (Axis::Width, s.w)] {
        if extent == 0 || extent % factor != 0 {
            return Err(Error::dim(axis, (extent / factor).max(1) * factor, extent));
        }
    }

    let mut enc_in = Vec::with_capacity(cfg.stages);
    let mut enc_pre = Vec::with_capacity(cfg.stages);
    let mut indices = Vec::with_capacity(cfg.stages);
    let mut x = images.clone();
    for conv in &params.trunk.encoder {
        let pre = conv3(&x, conv)?;
        let (pooled, idx) = maxpool2x2(&relu(&pre))?;
        enc_in.push(std::mem::replace(&mut x, pooled));
        enc_pre.push(pre);
        indices.push(idx);
    }
    let bott_pre = conv3(&x, &params.trunk.bottleneck)?;
    let bott_in = x;
    let mut x = relu(&bott_pre);
    let latent = capture_latent.then(|| x.clone());

    let mut dec_in = vec![Tensor::zeros(Shape::new(0, 0, 0, 0)); cfg.stages];
    let mut dec_pre = vec![Tensor::zeros(Shape::new(0, 0, 0, 0)); cfg.stages];
    for st in (0..cfg.stages).rev() {
        let up = maxunpool2x2(&x, &indices[st])?;
        let pre = conv3(&up, &params.trunk.decoder[st])?;
        x = relu(&pre);
        dec_in[st] = up;
        dec_pre[st] = pre;
    }
    let features = x;

    let mut logits = PerTask::from_fn(|_| None);
    let mut head_pre = PerTask::from_fn(|_| None);
    let mut head_act = PerTask::from_fn(|_| None);
    for t in tasks.iter() {
        let head = &params.heads[t];
        let pre = conv2d_forward(&features, &head.reduce.weight, &head.reduce.bias, 1, 0)?;
        let act = relu(&pre);
        logits[t] = Some(conv2d_forward_padded(
            &act,
            &head.out.weight,
            &head.out.bias,
            1,
            Padding::same(HEAD_KERNEL),
        )?);
        head_pre[t] = Some(pre);
        head_act[t] = Some(act);
    }
    Ok(ForwardOutput {
        logits,
        latent,
        cache: ForwardCache {
            tasks,
            batch: s.n,
            enc_in,
            enc_pre,
            indices,
            bott_in,
            bott_pre,
            dec_in,
            dec_pre,
            features,
            head_pre,
            head_act,
        },
    })
}

/// Trunk gradients from a gradient on the shared decoder output.
fn trunk_backward(
    params: &ModelParams,
    cache: &ForwardCache,
    grad_features: Tensor,
) -> Result<Trunk> {
    let stages = params.config.stages;
    let mut grads = params.trunk.zeros_like();
    let mut g = grad_features;
    for st in 0..stages {
        let gp = relu_backward(&cache.dec_pre[st], &g)?;
        let c = conv2d_backward(
            &cache.dec_in[st],
            &params.trunk.decoder[st].weight,
            &gp,
            1,
            TRUNK_PAD,
        )?;
        grads.decoder[st] = Conv {
            weight: c.weight,
            bias: c.bias,
        };
        g = maxunpool2x2_backward(&c.input, &cache.indices[st])?;
    }
    let gp = relu_backward(&cache.bott_pre, &g)?;
    let c = conv2d_backward(
        &cache.bott_in,
        &params.trunk.bottleneck.weight,
        &gp,
        1,
        TRUNK_PAD,
    )?;
    grads.bottleneck = Conv {
        weight: c.weight,
        bias: c.bias,
    };
    g = c.input;
    for st in (0..stages).rev() {
        let ga = maxpool2x2_backward(&g, &cache.indices[st])?;
        let gp = relu_backward(&cache.enc_pre[st], &ga)?;
        let c = conv2d_backward(
            &cache.enc_in[st],
            &params.trunk.encoder[st].weight,
            &gp,
            1,
            TRUNK_PAD,
        )?;
        grads.encoder[st] = Conv {
            weight: c.weight,
            bias: c.bias,
        };
        g = c.input;
    }
    Ok(grads)
}

/// Head gradients and the gradient on the shared features for one task.
fn head_backward(
    head: &Head,
    cache: &ForwardCache,
    task: Task,
    upstream: &Tensor,
) -> Result<(Head, Tensor)> {
    let act = cache.head_act[task].as_ref().expect("cached with the task");
    let pre = cache.head_pre[task].as_ref().expect("cached with the task");
    let out = conv2d_backward_padded(
        act,
        &head.out.weight,
        upstream,
        1,
        Padding::same(HEAD_KERNEL),
    )?;
    let gpre = relu_backward(pre, &out.input)?;
    let reduce = conv2d_backward(&cache.features, &head.reduce.weight, &gpre, 1, 0)?;
    Ok((
        Head {
            reduce: Conv {
                weight: reduce.weight,
                bias: reduce.bias,
            },
            out: Conv {
                weight: out.weight,
                bias: out.bias,
            },
        },
        reduce.input,
    ))
}

/// Reverse-mode gradients of `sum_t <upstream_t, logits_t>`.
///
/// Each task is propagated through the trunk on its own and the per-task
/// trunk gradients are summed in E, S, C, D order, so the joint trunk
/// gradient is bit-identical to the sum of single-task backward passes.
/// Tasks without an upstream gradient contribute nothing.
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    upstream: &PerTask<Option<Tensor>>,
) -> Result<ParamGrads> {
    let mut grads = ParamGrads::zeros_like(params);
    for t in Task::ALL {
        let Some(up) = upstream[t].as_ref() else {
            continue;
        };
        if !cache.tasks.contains(t) {
            return Err(Error::State(format!(
                "no cached forward pass for task {}",
                t.letter()
            )));
        }
        let expected = Shape::new(
            cache.batch,
            params.config.head_depth(t),
            cache.features.shape().h,
            cache.features.shape().w,
        );
        if up.shape() != expected {
            return Err(Error::State(format!(
                "upstream for task {} has shape {}, forward produced {expected}",
                t.letter(),
                up.shape()
            )));
        }
        let (head, gfeat) = head_backward(&params.heads[t], cache, t, up)?;
        grads.heads[t] = head;
        let trunk = trunk_backward(params, cache, gfeat)?;
        grads.trunk.add_assign(&trunk);
        grads.trunk_by_task[t] = Some(trunk);
    }
    Ok(grads)
}
