use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image header: {0}")]
    CorruptHeader(String),

    #[error("corrupt image payload: {0}")]
    CorruptPayload(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("rectangle {rect:?} does not fit inside a {width}x{height} image")]
    OutOfBounds {
        rect: crate::image::Rect,
        width: usize,
        height: usize,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("degenerate symmetry band: {0}")]
    DegenerateBand(String),

    #[error("malformed cascade: {0}")]
    MalformedCascade(String),

    #[error("invalid cascade: {0}")]
    InvalidCascade(String),

    #[error("image ({width}x{height}) is smaller than the {win_w}x{win_h} detection window")]
    ImageTooSmall {
        width: usize,
        height: usize,
        win_w: usize,
        win_h: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry mismatch: expected {expected:?}, got {actual:?}")]
    GeometryMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NonConvergence { sweeps: usize, off_norm: f64 },

    #[error("unsupported model version {0}")]
    VersionMismatch(u16),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("model invariant violated: {0}")]
    InvariantViolation(String),

    #[error("empty gallery")]
    EmptyGallery,

    #[error("empty corpus: {0}")]
    EmptyCorpus(PathBuf),

    #[error("split infeasible: {0}")]
    InfeasibleSplit(String),

    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
