//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// `Config` covers everything detectable before a run starts (bad files,
/// incomplete channel tables, impossible topologies); once a simulation is
/// running it is total and produces no errors.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, table, or scenario input.
    #[error("config error: {0}")]
    Config(String),

    /// A link whose success probability is zero can never carry a frame,
    /// so its expected transmission count is undefined.
    #[error("unusable link: success probability is zero")]
    UnusableLink,

    /// I/O failure while reading configs or writing results.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
