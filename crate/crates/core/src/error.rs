use thiserror::Error;

/// Errors raised by the bit sources, the statistical tests and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A source ran dry, or a block is too short for the requested test.
    #[error("insufficient input: {requested} bits requested, {available} available")]
    InsufficientInput { requested: u64, available: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    /// A special function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A level-1 test produced something the harness cannot accept, e.g. a
    /// p-value outside [0, 1]. Always a bug in the level-1 code.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// Too many level-1 applications were discarded for the run to finish.
    #[error("test inapplicable at this n: {0}")]
    Inapplicable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn require_bits(requested: usize, available: usize) -> Result<()> {
    if available < requested {
        return Err(Error::InsufficientInput {
            requested: requested as u64,
            available: available as u64,
        });
    }
    Ok(())
}
