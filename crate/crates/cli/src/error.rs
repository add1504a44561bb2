use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Where a problem in an input file was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path.display())?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
            if let Some(column) = self.column {
                write!(f, ":{column}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{location}: {message}")]
    Parse { location: Location, message: String },

    #[error("{0}")]
    Mismatch(String),

    #[error(transparent)]
    Core(#[from] nlos_bounds::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 2 parse or input error, 3 geometry, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse { .. } | Self::Mismatch(_) => 2,
            Self::Core(nlos_bounds::Error::InvalidInput(_)) => 2,
            Self::Core(nlos_bounds::Error::Geometry(_)) => 3,
            Self::Core(nlos_bounds::Error::Numerical(_)) => 4,
            Self::Io { .. } | Self::Csv(_) | Self::Json(_) => 1,
        }
    }
}
