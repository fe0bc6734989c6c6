use std::path::{Path, PathBuf};

use thiserror::Error;

/// Everything the IO layer, pipeline, CLI and service can fail with.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] hyret_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Data {
        path: PathBuf,
        #[source]
        source: hyret_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("embedding provider: {0}")]
    Provider(String),
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Self::Parse { path: path.to_path_buf(), line, msg: msg.into() }
    }

    pub fn data(path: &Path, source: hyret_core::Error) -> Self {
        Self::Data { path: path.to_path_buf(), source }
    }

    pub fn stage(stage: &'static str, source: Error) -> Self {
        Self::Stage { stage, source: Box::new(source) }
    }

    /// 0 success, 1 usage/configuration, 2 bad input data, 3 internal.
    pub fn exit_code(&self) -> u8 {
        use hyret_core::Error as C;
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Core(C::Config(_)) => 1,
            Error::Core(C::Provider(_)) => 3,
            Error::Core(_) | Error::Io { .. } | Error::Parse { .. } | Error::Data { .. } => 2,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Provider(_) | Error::Internal(_) => 3,
        }
    }
}

pub trait WithStage<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> WithStage<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::stage(stage, e.into()))
    }
}
