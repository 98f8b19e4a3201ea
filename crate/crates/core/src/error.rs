use std::fmt;

use thiserror::Error;

/// Pipeline stage a learning failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Basis,
    Hankel,
    Decompose,
    Naturalize,
    Extract,
    Reconstruct,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Basis => "basis",
            Stage::Hankel => "hankel",
            Stage::Decompose => "decompose",
            Stage::Naturalize => "naturalize",
            Stage::Extract => "extract",
            Stage::Reconstruct => "reconstruct",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("resource limit exceeded: {what} (limit {limit})")]
    Resource { what: &'static str, limit: usize },

    #[error("degenerate Hankel matrix: numeric rank is 0")]
    Degenerate,

    #[error("insufficient data or mask: H_chi for letter {letter} is not in the row space of H_theta (residual {residual:.3e}); enlarge the mask length or collect more samples")]
    NotClosed { letter: String, residual: f64 },

    #[error("data does not admit a natural decomposition: {0}")]
    NotNatural(String),

    #[error("pseudo-inverse failed: {0}")]
    PseudoInverse(String),

    #[error("letter {0} is not in the tuple alphabet")]
    UnknownLetter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{stage} stage failed: {source}")]
    Learn {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(stage: Stage) -> impl FnOnce(Error) -> Error {
        move |e| match e {
            e @ Error::Learn { .. } => e,
            e => Error::Learn {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Learn { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Learn { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
