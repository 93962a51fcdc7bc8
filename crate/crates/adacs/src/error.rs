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
    #[error("{}: malformed PGM: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: unsupported PGM: {msg}", path.display())]
    Unsupported { path: PathBuf, msg: String },
    #[error("{}: line {line}: {msg}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("invalid setting: {0}")]
    Setting(String),
    #[error(transparent)]
    Core(#[from] adacs_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
