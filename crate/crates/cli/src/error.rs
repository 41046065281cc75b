use thiserror::Error;

/// Failures surfaced by the command-line harness, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(ivsurv::Error),
    #[error("numerical failure: {0}")]
    Numerical(ivsurv::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Output(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<ivsurv::Error> for CliError {
    fn from(e: ivsurv::Error) -> Self {
        use ivsurv::Error as E;
        match e {
            E::InvalidConfig(m) => CliError::Config(m),
            E::IncompatibleEstimator { .. } | E::KappaNonPositive { .. } | E::KTooLarge { .. } => {
                CliError::Config(e.to_string())
            }
            e if e.is_data_error() => CliError::Data(e),
            e => CliError::Numerical(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
