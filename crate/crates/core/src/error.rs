use std::path::PathBuf;

use crate::Side;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("query {0:?} is not part of the session")]
    QueryNotInSession(String),

    #[error("seed set is empty")]
    EmptySeeds,

    #[error("none of the {count} seeds are present on the {side} side of the graph")]
    NoSeedsInGraph { count: usize, side: Side },

    #[error("{side} {item:?} is not present in the graph")]
    NotInGraph { side: Side, item: String },

    #[error("cannot train a scorer: the {0} class is empty")]
    EmptyClass(crate::hybrid::Label),

    #[error("positive and negative training sets overlap on {0:?}")]
    OverlappingClasses(String),

    #[error("infeasible corpus spec: {0}")]
    InfeasibleSpec(String),

    #[error("too many malformed lines in {path}: {malformed} of {total}")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
