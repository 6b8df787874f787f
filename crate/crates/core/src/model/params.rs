use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, HEAD_KERNEL, TRUNK_KERNEL};
use crate::error::Result;
use crate::task::{PerTask, Task};
use crate::tensor::{Shape, Tensor};

/// Weights `(out, in, k, k)` and biases of one convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub weight: Tensor,
    pub bias: Vec<f64>,
}

impl Conv {
    pub fn zeros(out_c: usize, in_c: usize, k: usize) -> Self {
        Conv {
            weight: Tensor::zeros(Shape::new(out_c, in_c, k, k)),
            bias: vec![0.0; out_c],
        }
    }

    /// Uniform on `+-sqrt(6 / fan_in)`, zero bias.
    pub fn he_uniform<R: Rng + ?Sized>(out_c: usize, in_c: usize, k: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (in_c * k * k) as f64).sqrt();
        Conv {
            weight: Tensor::random_uniform(Shape::new(out_c, in_c, k, k), -bound, bound, rng),
            bias: vec![0.0; out_c],
        }
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape().n
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape().h
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    fn zeros_like(&self) -> Self {
        Conv {
            weight: Tensor::zeros(self.weight.shape()),
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn add_assign(&mut self, other: &Conv) {
        for (a, b) in self.weight.data_mut().iter_mut().zip(other.weight.data()) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }
}

/// Shared encoder, bottleneck and decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Trunk {
    /// Stage `s` maps `width(s-1)` (or the image channels) to `width(s)`.
    pub encoder: Vec<Conv>,
    pub bottleneck: Conv,
    /// Indexed by the stage whose pooling indices precede it.
    pub decoder: Vec<Conv>,
}

impl Trunk {
    pub fn convs(&self) -> impl Iterator<Item = (String, &Conv)> {
        let enc = self
            .encoder
            .iter()
            .enumerate()
            .map(|(s, c)| (format!("enc{s}"), c));
        let bott = std::iter::once(("bottleneck".to_string(), &self.bottleneck));
        let dec = self
            .decoder
            .iter()
            .enumerate()
            .rev()
            .map(|(s, c)| (format!("dec{s}"), c));
        enc.chain(bott).chain(dec)
    }

    pub fn convs_mut(&mut self) -> impl Iterator<Item = &mut Conv> {
        self.encoder
            .iter_mut()
            .chain(std::iter::once(&mut self.bottleneck))
            .chain(self.decoder.iter_mut().rev())
    }

    pub fn zeros_like(&self) -> Trunk {
        Trunk {
            encoder: self.encoder.iter().map(Conv::zeros_like).collect(),
            bottleneck: self.bottleneck.zeros_like(),
            decoder: self.decoder.iter().map(Conv::zeros_like).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Trunk) {
        for (a, b) in self.convs_mut().zip(other.convs().map(|(_, c)| c)) {
            a.add_assign(b);
        }
    }
}

/// Task head: 1x1 conv and ReLU, then an 8x8 conv producing logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub reduce: Conv,
    pub out: Conv,
}

impl Head {
    pub fn zeros_like(&self) -> Head {
        Head {
            reduce: self.reduce.zeros_like(),
            out: self.out.zeros_like(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub trunk: Trunk,
    pub heads: PerTask<Head>,
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        Self::build(config, Conv::zeros)
    }

    /// He-uniform weights and zero biases, drawn in [`ModelParams::named_convs`] order.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(config, |o, i, k| Conv::he_uniform(o, i, k, &mut rng))
    }

    fn build(
        config: ModelConfig,
        mut make: impl FnMut(usize, usize, usize) -> Conv,
    ) -> Result<Self> {
        config.validate()?;
        let k = TRUNK_KERNEL;
        let mut encoder = Vec::with_capacity(config.stages);
        let mut cin = config.in_channels;
        for s in 0..config.stages {
            encoder.push(make(config.stage_width(s), cin, k));
            cin = config.stage_width(s);
        }
        let bottleneck = make(cin, cin, k);
        // Built deepest first so the draw order follows the data flow.
        let mut decoder: Vec<Conv> = (0..config.stages)
            .rev()
            .map(|s| make(config.decoder_width(s), config.stage_width(s), k))
            .collect();
        decoder.reverse();
        let heads = PerTask::from_fn(|t| {
            let d = config.head_depth(t);
            Head {
                reduce: make(d, config.base_width, 1),
                out: make(d, d, HEAD_KERNEL),
            }
        });
        Ok(ModelParams {
            config,
            trunk: Trunk {
                encoder,
                bottleneck,
                decoder,
            },
            heads,
        })
    }

    /// Every conv with a stable name, trunk first (data-flow order), then
    /// heads in E, S, C, D order.
    pub fn named_convs(&self) -> Vec<(String, &Conv)> {
        let mut out: Vec<(String, &Conv)> = self.trunk.convs().collect();
        for (t, h) in self.heads.iter() {
            out.push((format!("head{}.reduce", t.letter()), &h.reduce));
            out.push((format!("head{}.out", t.letter()), &h.out));
        }
        out
    }

    pub fn convs_mut(&mut self) -> Vec<&mut Conv> {
        let mut out: Vec<&mut Conv> = self.trunk.convs_mut().collect();
        for h in self.heads.0.iter_mut() {
            out.push(&mut h.reduce);
            out.push(&mut h.out);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.named_convs().iter().map(|(_, c)| c.num_params()).sum()
    }

    /// All parameters flattened in [`ModelParams::named_convs`] order, each
    /// conv contributing weights then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, c) in self.named_convs() {
            out.extend_from_slice(c.weight.data());
            out.extend_from_slice(&c.bias);
        }
        out
    }

    /// Inverse of [`ModelParams::flatten`].
    pub fn unflatten(&mut self, values: &[f64]) -> Result<()> {
        crate::error::Error::check(crate::error::Axis::Length, self.num_params(), values.len())?;
        let mut at = 0;
        for c in self.convs_mut() {
            let n = c.weight.len();
            c.weight.data_mut().copy_from_slice(&values[at..at + n]);
            at += n;
            let b = c.bias.len();
            c.bias.copy_from_slice(&values[at..at + b]);
            at += b;
        }
        Ok(())
    }

    pub fn head(&self, task: Task) -> &Head {
        &self.heads[task]
    }

    pub fn all_finite(&self) -> bool {
        self.named_convs()
            .iter()
            .all(|(_, c)| c.weight.all_finite() && c.bias.iter().all(|b| b.is_finite()))
    }
}

/// Gradients with the layout of [`ModelParams`].
///
/// `trunk` is the sum of `trunk_by_task` over the tasks that received an
/// upstream gradient, accumulated in E, S, C, D order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub trunk: Trunk,
    pub trunk_by_task: PerTask<Option<Trunk>>,
    pub heads: PerTask<Head>,
}

impl ParamGrads {
    pub fn zeros_like(params: &ModelParams) -> Self {
        ParamGrads {
            trunk: params.trunk.zeros_like(),
            trunk_by_task: PerTask::from_fn(|_| None),
            heads: PerTask::from_fn(|t| params.heads[t].zeros_like()),
        }
    }

    /// Flattened like [`ModelParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut push = |c: &Conv| {
            out.extend_from_slice(c.weight.data());
            out.extend_from_slice(&c.bias);
        };
        for (_, c) in self.trunk.convs() {
            push(c);
        }
        for h in &self.heads.0 {
            push(&h.reduce);
            push(&h.out);
        }
        out
    }
}
