use std::io;
use std::path::PathBuf;

use mixflow_core::Error as CoreError;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const FLUX_INCOMPATIBLE: i32 = 3;
    pub const PICARD_DIVERGENCE: i32 = 4;
    pub const NOT_IN_H: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    /// Syntax error in a mesh or snapshot file.
    #[error("{}:{line}: {message}", path.display())]
    Format { path: PathBuf, line: usize, message: String },
    /// TOML syntax or schema error; the message carries line and column.
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("invalid `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core { context: &'static str, source: CoreError },
    #[error("compatibility functional {functional} is not in H (growth exponent {exponent:.4})")]
    NotInH { functional: &'static str, exponent: f64 },
    #[error("{0} boundary identities exceed tolerance")]
    IdentityFailure(usize),
}

impl CliError {
    pub fn core(context: &'static str) -> impl FnOnce(CoreError) -> CliError {
        move |source| CliError::Core { context, source }
    }

    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Field { field: field.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Format { .. } | CliError::Config { .. } | CliError::Field { .. } | CliError::Usage(_) => exit::USAGE,
            CliError::Core { source: CoreError::FluxIncompatible { .. }, .. } => exit::FLUX_INCOMPATIBLE,
            CliError::Core { source: CoreError::PicardDivergence { .. }, .. } => exit::PICARD_DIVERGENCE,
            CliError::NotInH { .. } => exit::NOT_IN_H,
            CliError::Io { .. } | CliError::Core { .. } | CliError::IdentityFailure(_) => exit::FAILURE,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
