use std::fmt;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch on axis `{axis}`: expected {expected}, got {got}")]
    Dimension {
        axis: Axis,
        expected: usize,
        got: usize,
    },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("state error: {0}")]
    State(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },
    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// The axis named in a [`Error::Dimension`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Batch,
    Channels,
    Height,
    Width,
    Length,
    Classes,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axis::Batch => "batch",
            Axis::Channels => "channels",
            Axis::Height => "height",
            Axis::Width => "width",
            Axis::Length => "length",
            Axis::Classes => "classes",
        };
        f.write_str(name)
    }
}

impl Error {
    pub(crate) fn dim(axis: Axis, expected: usize, got: usize) -> Self {
        Error::Dimension {
            axis,
            expected,
            got,
        }
    }

    /// Fails with a dimension error unless `expected == got`.
    pub(crate) fn check(axis: Axis, expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::dim(axis, expected, got))
        }
    }
}
