use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// A header that does not follow the documented schema.
    #[error("{source_name}: header: {message}")]
    Header { source_name: String, message: String },
    /// A bad cell. `line` counts the header as line 1; `row` counts data rows from 1.
    #[error("{source_name}: line {line} (row {row}), column `{column}`: {message}")]
    Cell {
        source_name: String,
        line: u64,
        row: u64,
        column: String,
        message: String,
    },
    /// A structurally broken record (wrong field count, bad quoting, bad UTF-8).
    #[error("{source_name}: line {line}: {message}")]
    Record {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}: {message}")]
    Format { source_name: String, message: String },
    #[error("{source_name}: {source}")]
    Data {
        source_name: String,
        source: cxrsev_core::Error,
    },
    #[error(transparent)]
    Core(#[from] cxrsev_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.into(),
            message: message.into(),
        }
    }
}

/// Reads a whole file, attaching the path to any failure.
pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
