use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{what} did not converge (residual {residual:.3e})")]
    Numerical { what: &'static str, residual: f64 },
    #[error("stage {stage}: {msg}")]
    Protocol { stage: usize, msg: String },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("episode with seed {seed} failed: {source}")]
    Episode { seed: u64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
