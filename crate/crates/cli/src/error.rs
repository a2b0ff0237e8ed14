use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or parameter combination.
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Unwritable(String),
    #[error(transparent)]
    Run(#[from] rng_audit::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Unwritable(_) => 3,
            CliError::Run(_) => 1,
        }
    }
}
