use thiserror::Error;

/// Error classes with their process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Output could not be written.
    Output,
    /// Bad flags or parameter values, from the command line or a config file.
    Config,
    /// The design file cannot be read, or a row lies outside the model domain.
    Ingestion,
    /// A numerical failure: singular information, infeasible target, ...
    Numerical,
    /// An iterative fit or solver did not converge.
    NonConvergence,
}

impl ErrorKind {
    /// Machine-readable code printed on the error line.
    pub fn code(self) -> &'static str {
        match self {
            ErrorKind::Output => "output_error",
            ErrorKind::Config => "config_error",
            ErrorKind::Ingestion => "ingestion_error",
            ErrorKind::Numerical => "numerical_error",
            ErrorKind::NonConvergence => "non_convergence",
        }
    }

    pub fn exit_status(self) -> u8 {
        match self {
            ErrorKind::Output => 1,
            ErrorKind::Config => 2,
            ErrorKind::Ingestion => 3,
            ErrorKind::Numerical => 4,
            ErrorKind::NonConvergence => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn ingestion(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Ingestion, message)
    }

    /// The single stderr line: `error[<code>]: <diagnostic>`.
    pub fn line(&self) -> String {
        let message = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[{}]: {message}", self.kind.code())
    }
}

impl From<glm_pss::Error> for CliError {
    fn from(e: glm_pss::Error) -> Self {
        use glm_pss::Error as E;
        let kind = match &e {
            E::Config(_) => ErrorKind::Config,
            E::Io(_) => ErrorKind::Output,
            E::NonConvergence { .. } | E::Estimation(_) => ErrorKind::NonConvergence,
            E::Domain(_) | E::Singular(_) | E::Infeasible(_) | E::DegenerateApproximation(_) => ErrorKind::Numerical,
        };
        Self::new(kind, e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
