use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] treelet_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("transport: {0}")]
    Transport(String),
    #[error("worker {worker}, sub-template {entry}: {msg}")]
    Protocol {
        worker: usize,
        entry: usize,
        msg: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable category for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(treelet_core::Error::InvalidArgument(_)) => "invalid_argument",
            Error::Core(treelet_core::Error::NotATree(_)) => "not_a_tree",
            Error::Core(treelet_core::Error::SizeGuard(_)) => "size_guard",
            Error::Core(_) => "core",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Transport(_) => "transport",
            Error::Protocol { .. } => "protocol",
            Error::Config(_) => "config",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Transport(e.to_string())
    }
}
