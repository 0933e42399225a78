use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PosgridError {
    #[error(transparent)]
    Core(#[from] posgrid_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: malformed JSON at byte {offset}: {message}")]
    Json {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Input(String),
}

impl PosgridError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        PosgridError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        PosgridError::Format {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for IO failures, 1 for everything the caller can
    /// fix by changing inputs or flags.
    pub fn exit_code(&self) -> i32 {
        match self {
            PosgridError::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = PosgridError> = std::result::Result<T, E>;

/// Converts a serde_json error on `text` into one carrying a byte offset.
pub(crate) fn json_error(path: &Path, text: &str, err: serde_json::Error) -> PosgridError {
    PosgridError::Json {
        path: path.to_path_buf(),
        offset: byte_offset(text, err.line(), err.column()),
        message: err.to_string(),
    }
}

/// Byte offset of a 1-based line and column (column counts bytes).
pub(crate) fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
