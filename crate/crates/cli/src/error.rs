use std::path::PathBuf;

use impscat_core::ScatterError;
use thiserror::Error;

use crate::table::TableError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration; `line` refers to the configuration file.
    #[error("{origin}:{}: {key}: {message}", line.map_or_else(|| "?".to_string(), |l| l.to_string()))]
    Config { origin: String, line: Option<usize>, key: String, message: String },

    /// The library rejected an input while running the scenario.
    #[error("invalid input: {0}")]
    Input(ScatterError),

    #[error("solver failure: {0}")]
    Solver(ScatterError),

    /// The scaling fit has nothing to fit.
    #[error("scaling fit rejected: {0}")]
    ZeroSignal(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Table { path: PathBuf, source: TableError },
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for solver
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Input(_) | CliError::ZeroSignal(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } | CliError::Table { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<ScatterError> for CliError {
    fn from(e: ScatterError) -> Self {
        match e {
            ScatterError::Validation(_) | ScatterError::Domain(_) | ScatterError::NotApplicable(_) | ScatterError::Parse { .. } => {
                CliError::Input(e)
            }
            ScatterError::Io(ref m) => CliError::Io { path: PathBuf::new(), source: std::io::Error::other(m.clone()) },
            _ => CliError::Solver(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
