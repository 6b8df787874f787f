use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::targets::DistanceTransformConfig;
use crate::task::{Task, TaskSet};

/// Everything that determines a training run besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Tasks with a head in the objective; `S` is required.
    pub tasks: TaskSet,
    pub loss: LossWeights,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Global L2 norm the gradient is rescaled to before the update when it
    /// is larger; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Side of the square random crop; `None` trains on whole images.
    pub crop_size: Option<usize>,
    /// Contrast factor drawn uniformly from this range.
    pub contrast: (f64, f64),
    /// Brightness offset drawn uniformly from this range.
    pub brightness: (f64, f64),
    pub flip_probability: f64,
    pub base_width: usize,
    pub stages: usize,
    pub distance: DistanceTransformConfig,
    /// Iterations between held-out evaluations; `None` means once per epoch.
    pub eval_every: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    pub latent: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tasks: TaskSet::all(),
            loss: LossWeights::default(),
            learning_rate: 0.01,
            momentum: 0.9,
            grad_clip: Some(1.0),
            batch_size: 4,
            iterations: 1000,
            seed: 0,
            crop_size: None,
            contrast: (0.8, 1.2),
            brightness: (-0.1, 0.1),
            flip_probability: 0.5,
            base_width: 16,
            stages: 3,
            distance: DistanceTransformConfig::default(),
            eval_every: None,
            checkpoint: None,
            latent: None,
            log: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn lambda_key(t: Task) -> String {
    format!("lambda_{}", t.letter())
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tasks.contains(Task::Segmentation) {
            return Err(Error::Config("the task set must include S".into()));
        }
        self.loss.restricted_to(self.tasks).validate()?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config("grad_clip must be positive".into()));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.crop_size == Some(0) {
            return Err(Error::Config("crop_size must be positive".into()));
        }
        if !(self.contrast.0 <= self.contrast.1 && self.brightness.0 <= self.brightness.1) {
            return Err(Error::Config(
                "augmentation ranges must have min <= max".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(Error::Config("flip_probability must lie in [0, 1]".into()));
        }
        if self.eval_every == Some(0) {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        Ok(())
    }

    /// Effective loss weights: zero outside the configured task set.
    pub fn effective_loss(&self) -> LossWeights {
        self.loss.restricted_to(self.tasks)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "tasks" => self.tasks = value.parse()?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "grad_clip" => {
                self.grad_clip = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "batch_size" => self.batch_size = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "crop_size" => {
                self.crop_size = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "contrast_min" => self.contrast.0 = parse(key, value)?,
            "contrast_max" => self.contrast.1 = parse(key, value)?,
            "brightness_min" => self.brightness.0 = parse(key, value)?,
            "brightness_max" => self.brightness.1 = parse(key, value)?,
            "flip_probability" => self.flip_probability = parse(key, value)?,
            "base_width" => self.base_width = parse(key, value)?,
            "stages" => self.stages = parse(key, value)?,
            "truncation" => {
                self.distance =
                    DistanceTransformConfig::new(parse(key, value)?, self.distance.bins())?
            }
            "bins" => {
                self.distance =
                    DistanceTransformConfig::new(self.distance.truncation(), parse(key, value)?)?
            }
            "eval_every" => {
                self.eval_every = match value {
                    "" | "epoch" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "checkpoint" => self.checkpoint = opt_path(value),
            "latent" => self.latent = opt_path(value),
            "log" => self.log = opt_path(value),
            k if k.starts_with("psi") => {
                let i: usize = parse(key, &k[3..])?;
                if !(1..=6).contains(&i) {
                    return Err(Error::Config(format!("unknown key `{key}`")));
                }
                self.loss.psi[i - 1] = parse(key, value)?;
            }
            "omega1" => self.loss.omega[0] = parse(key, value)?,
            "omega2" => self.loss.omega[1] = parse(key, value)?,
            k => match Task::ALL.into_iter().find(|&t| lambda_key(t) == k) {
                Some(t) => self.loss.lambda[t] = parse(key, value)?,
                None => return Err(Error::Config(format!("unknown key `{key}`"))),
            },
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`",
                    n + 1
                )));
            };
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The full configuration as `key = value` lines that
    /// [`TrainConfig::parse_str`] reads back unchanged.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("tasks", self.tasks.to_string());
        for t in Task::ALL {
            kv(&lambda_key(t), self.loss.lambda[t].to_string());
        }
        for (i, p) in self.loss.psi.iter().enumerate() {
            kv(&format!("psi{}", i + 1), p.to_string());
        }
        kv("omega1", self.loss.omega[0].to_string());
        kv("omega2", self.loss.omega[1].to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("momentum", self.momentum.to_string());
        kv(
            "grad_clip",
            self.grad_clip
                .map(|c| c.to_string())
                .unwrap_or_else(|| "none".into()),
        );
        kv("batch_size", self.batch_size.to_string());
        kv("iterations", self.iterations.to_string());
        kv("seed", self.seed.to_string());
        kv(
            "crop_size",
            self.crop_size
                .map(|c| c.to_string())
                .unwrap_or_else(|| "none".into()),
        );
        kv("contrast_min", self.contrast.0.to_string());
        kv("contrast_max", self.contrast.1.to_string());
        kv("brightness_min", self.brightness.0.to_string());
        kv("brightness_max", self.brightness.1.to_string());
        kv("flip_probability", self.flip_probability.to_string());
        kv("base_width", self.base_width.to_string());
        kv("stages", self.stages.to_string());
        kv("truncation", self.distance.truncation().to_string());
        kv("bins", self.distance.bins().to_string());
        kv(
            "eval_every",
            self.eval_every
                .map(|e| e.to_string())
                .unwrap_or_else(|| "epoch".into()),
        );
        kv("checkpoint", path(&self.checkpoint));
        kv("latent", path(&self.latent));
        kv("log", path(&self.log));
        s
    }
}
