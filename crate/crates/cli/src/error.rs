use fastgate::{ConfigError, OptimizeError, SolverError, WaveformError};

/// Failure categories with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input (exit 1).
    Input(String),
    /// Numerical failure such as a grid or step audit (exit 2).
    Numerical(String),
    /// No candidate passed the ε_t screen (exit 3).
    NoCandidate(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::NoCandidate(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) | CliError::NoCandidate(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(c) => c.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Config(c) => c.into(),
            OptimizeError::Solver(s) => s.into(),
            OptimizeError::Space(m) => CliError::Input(format!("invalid search space: {m}")),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<WaveformError> for CliError {
    fn from(e: WaveformError) -> Self {
        match e {
            WaveformError::UnreachableAmplitude { .. } | WaveformError::ModelMismatch(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Attach the path to I/O errors.
pub fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}
