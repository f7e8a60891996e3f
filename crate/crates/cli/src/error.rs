use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Physics(#[from] hidaprop::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 0 ok, 1 config (or output) error, 2 invalid physics, 3 caustic.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Physics(hidaprop::Error::Caustic { .. }) => 3,
            CliError::Physics(_) => 2,
        }
    }
}
