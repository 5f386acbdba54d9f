use std::path::PathBuf;

/// Errors surfaced across the dataset / trainer / CLI boundary.
///
/// Shape and domain violations inside the numeric kernels are programming
/// errors and panic with precise messages instead; everything reachable from
/// user input or the filesystem comes through here.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{dataset}: unexpected schema: {msg}")]
    Schema { dataset: &'static str, msg: String },

    #[error("split {id}: {msg}")]
    Split { id: String, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
