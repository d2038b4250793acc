use thiserror::Error;

/// Errors produced by the simulation kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension argument violates a structural requirement (for example a
    /// pattern grid whose pixel count is not a power of four).
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// A scalar or enum argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A file did not parse as the expected external format.
    #[error("format error: {0}")]
    Format(String),

    /// A delay histogram with no counts has no peak to report.
    #[error("histogram is empty, no peak delay")]
    NoPeak,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
