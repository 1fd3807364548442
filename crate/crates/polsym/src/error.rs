use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed field file.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Invalid run configuration; the message names the key and line.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] polsym_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
