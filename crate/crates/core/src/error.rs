use thiserror::Error;

/// Errors surfaced by the channel synthesis, estimation, and tracking routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("numerically singular system (condition estimate {cond:.3e})")]
    SingularSystem { cond: f64 },

    #[error("model collapsed: every component was pruned")]
    ModelCollapsed,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
