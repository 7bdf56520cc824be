use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("runtime error: {0}")]
    Runtime(#[from] meanfield_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("criteria not met: {0}")]
    CriteriaFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CriteriaFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}
