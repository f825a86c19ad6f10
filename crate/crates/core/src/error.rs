use std::path::PathBuf;

/// Errors raised by the toolkit.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// Shapes of the inputs do not fit the operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// The zero-frequency power is not positive, so the profile cannot be normalized.
    #[error("degenerate spectrum: DC power is {0}")]
    DegenerateSpectrum(f64),

    /// Every sample passed to clustering is the same point.
    #[error("degenerate clustering: all points are identical")]
    DegenerateClustering,

    /// Caller broke an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
