use thiserror::Error;

/// Failure of a plan, split by exit status.
#[derive(Debug, Error)]
pub enum RunError {
    /// Unreadable or malformed input; exit status 2.
    #[error("config error: {0}")]
    Config(String),
    /// The configured physics cannot be simulated; exit status 3.
    #[error("scenario error: {0}")]
    Scenario(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Scenario(_) => 3,
        }
    }
}

impl From<fbsim_core::Error> for RunError {
    fn from(e: fbsim_core::Error) -> Self {
        use fbsim_core::Error as E;
        match e {
            E::Config(_) | E::Io(_) | E::Csv(_) => RunError::Config(e.to_string()),
            other => RunError::Scenario(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Config(e.to_string())
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;
