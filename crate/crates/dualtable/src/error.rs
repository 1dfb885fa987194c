use std::io;
use std::path::PathBuf;

use dualtable_core::{CoreError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("table `{0}` already exists")]
    TableExists(String),
    #[error("file id space exhausted for table `{0}`")]
    FileIdsExhausted(String),
    #[error("too many tables")]
    TableIdsExhausted,
    #[error("configuration: {0}")]
    Config(String),
    #[error("load: {0}")]
    Load(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("database is unusable after an I/O failure; reopen it")]
    Poisoned,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error comes from the caller's input rather than from
    /// storage or internal state.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Parse(_)
            | Error::UnknownTable(_)
            | Error::TableExists(_)
            | Error::Config(_)
            | Error::Load(_) => true,
            Error::Core(e) => !matches!(e, CoreError::Corrupt(_) | CoreError::PatchOnDeleted(_)),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
