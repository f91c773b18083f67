use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("tuner stopped at the evaluation limit before converging (NOT_CONVERGED)")]
    NotConverged,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 4 when the
    /// tuner runs out of evaluations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::NotConverged => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<omfc_core::Error> for CliError {
    fn from(e: omfc_core::Error) -> Self {
        use omfc_core::Error as E;
        match e {
            E::Singular { .. } | E::SignalNulled { .. } | E::AngleTooLarge(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
