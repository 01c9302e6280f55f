use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("capacity exceeded: {items} items do not fit in {cells} cells")]
    Capacity { items: usize, cells: usize },

    #[error("correlation undefined: {0} input is constant")]
    UndefinedCorrelation(&'static str),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, message: msg.into() }
    }

    /// Wraps the error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// True when the root cause is an I/O failure rather than bad input.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Stage { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
