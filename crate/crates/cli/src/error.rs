use thiserror::Error;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Config = 2,
    Data = 3,
    Solver = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("data error in `{field}`: {source}")]
    Data { field: String, source: itx::Error },
    #[error("{stage} failed: {source}")]
    Solver { stage: String, source: itx::Error },
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), message: message.into() }
    }

    /// Classify a library error raised while handling `field`.
    pub fn from_lib(field: &str, err: itx::Error) -> Self {
        use itx::Error as E;
        match err {
            E::InvalidWeight(_) | E::BadParams(_) | E::UnknownScene(_) | E::InstanceTooLarge { .. } => {
                CliError::Config { field: field.to_string(), message: err.to_string() }
            }
            E::InfeasibleInstance
            | E::SolverNonConvergence { .. }
            | E::NonFiniteLoss { .. }
            | E::NonFiniteActivation(_)
            | E::NonScalarLoss { .. } => CliError::Solver { stage: field.to_string(), source: err },
            _ => CliError::Data { field: field.to_string(), source: err },
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config { .. } => ExitCode::Config,
            CliError::Data { .. } => ExitCode::Data,
            CliError::Solver { .. } => ExitCode::Solver,
        }
    }
}

/// Attach a field name to library results.
pub(crate) trait Context<T> {
    fn field(self, field: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for itx::Result<T> {
    fn field(self, field: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::from_lib(field, e))
    }
}
