//! `mtl`: synthetic data, targets, training, evaluation and charts for the
//! multi-task hourglass network.

mod commands;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hourglass_core::Error;

#[derive(Parser)]
#[command(
    name = "mtl",
    version,
    about = "Multi-task hourglass segmentation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic-shapes dataset.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write edge, contour and quantized-distance targets plus class weights.
    Targets {
        #[arg(long)]
        manifest: PathBuf,
        /// Distance truncation R in pixels.
        #[arg(long, default_value_t = 20)]
        truncation: u32,
        /// Number of distance bins K.
        #[arg(long, default_value_t = 6)]
        bins: usize,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a model from a `key = value` configuration file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the configured task set, e.g. `S,E,C,D`.
        #[arg(long)]
        tasks: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        classes: Option<usize>,
    },
    /// Score a checkpoint: per-class metrics, trimap curve and latent clustering.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
        widths: Vec<u32>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Score the ground truth in place of model predictions.
        #[arg(long, hide = true)]
        perfect_stub: bool,
    },
    /// Draw trimap curves or training logs as a line chart.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("MTL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!("MTL_THREADS must be a positive integer, got `{v}`"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    init_threads()?;
    match cli.command {
        Command::Synth {
            seed,
            count,
            size,
            classes,
            out_dir,
        } => commands::synth(seed, count, size, classes, &out_dir),
        Command::Targets {
            manifest,
            truncation,
            bins,
            classes,
            out_dir,
        } => commands::targets(&manifest, truncation, bins, classes, &out_dir),
        Command::Train {
            config,
            manifest,
            out_dir,
            tasks,
            seed,
            classes,
        } => commands::train(&commands::TrainArgs {
            config,
            manifest,
            out_dir,
            tasks,
            seed,
            classes,
        }),
        Command::Eval {
            checkpoint,
            manifest,
            widths,
            out_dir,
            perfect_stub,
        } => commands::eval(&checkpoint, &manifest, &widths, &out_dir, perfect_stub),
        Command::Plot { csv, out } => commands::plot(&csv, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
