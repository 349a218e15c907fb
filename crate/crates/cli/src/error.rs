use thiserror::Error;

/// Command-line failures, each mapped to a stable exit code and a
/// machine-readable kind emitted as JSON on stderr.
#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration file or argument problems.
    #[error("{0}")]
    Config(String),
    /// Model, integration or analysis errors from the library.
    #[error(transparent)]
    Core(#[from] taxflow_core::Error),
    /// A command ran but produced nothing usable.
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Exit codes: 2 for configuration and precondition errors, 3 when the
    /// integration left the admissible region, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(taxflow_core::Error::BlowUp { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(taxflow_core::Error::BlowUp { .. }) => "blow-up",
            CliError::Core(_) => "config",
            CliError::Runtime(_) => "runtime",
            CliError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
