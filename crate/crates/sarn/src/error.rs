use std::path::PathBuf;

/// Error type shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An operation was called with inconsistent shapes, ranges, or flags.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was called on an object in the wrong state
    /// (for example an optimizer step with unset gradients).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A serialized file failed to decode. `offset` is the byte position
    /// at which decoding gave up.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Scene sampling exhausted its rejection budget.
    #[error("generation failed: {0}")]
    Generation(String),

    /// An introspection routine was asked for data the model kind does not produce.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset: offset as u64,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
