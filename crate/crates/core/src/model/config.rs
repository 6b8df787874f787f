use crate::error::{Error, Result};
use crate::task::Task;

/// Architecture hyper-parameters of the hourglass network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub in_channels: usize,
    /// Segmentation classes `N`, background included.
    pub n_classes: usize,
    /// Distance bins `K`.
    pub bins: usize,
    /// Encoder stages, each halving the resolution.
    pub stages: usize,
    /// Channels after the first encoder stage; stage `s` has `base * 2^s`.
    pub base_width: usize,
    /// Side of the square input images.
    pub input_size: usize,
}

/// Kernel of the last conv in every head.
pub const HEAD_KERNEL: usize = 8;
/// Kernel of trunk convs.
pub const TRUNK_KERNEL: usize = 3;

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            in_channels: 3,
            n_classes: 4,
            bins: 6,
            stages: 3,
            base_width: 16,
            input_size: 64,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("in_channels", self.in_channels),
            ("n_classes", self.n_classes),
            ("stages", self.stages),
            ("base_width", self.base_width),
            ("input_size", self.input_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.bins < 2 {
            return Err(Error::Config("bins must be at least 2".into()));
        }
        if self.stages > 16 {
            return Err(Error::Config(format!(
                "{} encoder stages is too deep",
                self.stages
            )));
        }
        let factor = 1usize << self.stages;
        if !self.input_size.is_multiple_of(factor) {
            return Err(Error::Config(format!(
                "input size {} is not divisible by 2^{} = {factor}",
                self.input_size, self.stages
            )));
        }
        Ok(())
    }

    /// Output channels of encoder stage `s` (also the bottleneck for the last).
    pub fn stage_width(&self, s: usize) -> usize {
        self.base_width << s
    }

    /// Output depth of a task head.
    pub fn head_depth(&self, task: Task) -> usize {
        match task {
            Task::Edge => 1,
            Task::Segmentation | Task::Contour => self.n_classes,
            Task::Distance => self.bins,
        }
    }

    /// Side of the bottleneck feature map.
    pub fn latent_size(&self) -> usize {
        self.input_size >> self.stages
    }

    /// Output channels of the decoder conv at stage `s`.
    pub fn decoder_width(&self, s: usize) -> usize {
        if s == 0 {
            self.base_width
        } else {
            self.stage_width(s - 1)
        }
    }

    /// Multiply-accumulates of one forward pass over one image with the given
    /// heads evaluated.
    pub fn forward_macs(&self, tasks: crate::task::TaskSet) -> u64 {
        let k2 = (TRUNK_KERNEL * TRUNK_KERNEL) as u64;
        let mut macs = 0u64;
        let mut cin = self.in_channels;
        for s in 0..self.stages {
            let plane = ((self.input_size >> s) * (self.input_size >> s)) as u64;
            let width = self.stage_width(s);
            macs += plane * (cin * width) as u64 * k2;
            macs += plane * (width * self.decoder_width(s)) as u64 * k2;
            cin = width;
        }
        let latent = (self.latent_size() * self.latent_size()) as u64;
        macs += latent * (cin * cin) as u64 * k2;
        let plane = (self.input_size * self.input_size) as u64;
        let hk = (HEAD_KERNEL * HEAD_KERNEL) as u64;
        for t in tasks.iter() {
            let d = self.head_depth(t) as u64;
            macs += plane * self.base_width as u64 * d + plane * d * d * hk;
        }
        macs
    }
}
