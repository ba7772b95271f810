use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid response curve: {0}")]
    InvalidCurve(String),

    #[error("frame {column} fully ill-exposed or foreground")]
    EmptyObservation { column: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed {format} data at byte {offset}: {reason}")]
    Malformed {
        format: &'static str,
        offset: usize,
        reason: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn malformed(format: &'static str, offset: usize, reason: impl Into<String>) -> Self {
        Error::Malformed {
            format,
            offset,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
