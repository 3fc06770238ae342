use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: {msg}")]
    Format { file: String, msg: String },
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("{0}")]
    Csv(String),
    #[error(transparent)]
    Core(#[from] ordlab_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(file: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            file: file.into(),
            msg: msg.into(),
        }
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Process exit status: 1 configuration, 3 budget refusal, 2 anything
    /// else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Core(ordlab_core::Error::Config(_)) => 1,
            Error::Core(ordlab_core::Error::Budget { .. }) => 3,
            _ => 2,
        }
    }
}
