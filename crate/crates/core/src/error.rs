use std::path::PathBuf;

use crate::iq::SignalClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid signal spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate bandwidth: {class} at {bandwidth_hz} Hz for {duration_s} s carries fewer than {min_symbols} symbols")]
    DegenerateBandwidth {
        class: SignalClass,
        bandwidth_hz: f64,
        duration_s: f64,
        min_symbols: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown scene id `{0}`")]
    UnknownScene(String),

    #[error("missing labels for scene `{0}`")]
    MissingLabels(String),

    #[error("no annotations")]
    NoAnnotations,

    #[error("png: {0}")]
    Png(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
