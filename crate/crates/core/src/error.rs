use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad grid dimensions, missing paths, bad ranges).
    #[error("configuration error: {0}")]
    Config(String),

    /// API misuse, e.g. stepping a terminal game or mismatched dimensions.
    #[error("usage error: {0}")]
    Usage(String),

    /// Training diverged or produced non-finite numbers.
    #[error("training error: {0}")]
    Training(String),

    /// Malformed checkpoint or trace file.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
