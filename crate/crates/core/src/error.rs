use thiserror::Error;

/// Errors raised by the frame, objective and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column {index} has norm {norm:e}, below the zero-column threshold")]
    ZeroColumn { index: usize, norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid frame shape: d={d}, N={n}")]
    InvalidShape { d: usize, n: usize },

    #[error("frame is not tight (frame operator deviation {deviation:e} > {tol:e})")]
    NotTight { deviation: f64, tol: f64 },

    #[error("channel vector has norm {norm:e}, below the zero threshold")]
    ZeroChannel { norm: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("every restart failed; last error: {0}")]
    AllRestartsFailed(String),

    #[error("malformed frame data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
