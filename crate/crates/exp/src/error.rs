use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Core(#[from] cubeshadow_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed record: {0}")]
    Parse(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("budget exceeded: {0}")]
    Budget(String),
}

impl ExpError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Invariant(_) => 2,
            ExpError::Budget(_) | ExpError::Core(cubeshadow_core::Error::BudgetExceeded { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExpError>;
