use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum NsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("I/O error at {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path} (byte {position}): {detail}")]
    MalformedFile {
        path: String,
        position: u64,
        detail: String,
    },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("out of domain: {detail}; first offending nodes: {nodes:?}")]
    OutOfDomain { detail: String, nodes: Vec<usize> },

    #[error("quadrature divergence: {0}")]
    Divergence(String),

    #[error("constants mismatch: {0}")]
    ConstantsMismatch(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, NsError>;

impl NsError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        NsError::Io {
            context: context.into(),
            source,
        }
    }
}
