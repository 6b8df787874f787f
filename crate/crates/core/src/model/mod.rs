//! Shared-trunk encoder-decoder with one head per task.

mod checkpoint;
mod config;
mod latent;
mod network;
mod params;

pub use checkpoint::{from_bytes, load_checkpoint, save_checkpoint, to_bytes, MAGIC, VERSION};
pub use config::{ModelConfig, HEAD_KERNEL, TRUNK_KERNEL};
pub use latent::LatentDump;
pub use network::{backward, forward, ForwardCache, ForwardOutput};
pub use params::{Conv, Head, ModelParams, ParamGrads, Trunk};
