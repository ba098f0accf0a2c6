use alloc::string::String;

/// Errors reported by tree construction, solvers and resolving drivers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed game tree: {0}")]
    Structure(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("strategy does not cover infosets: {0}")]
    IncompleteStrategy(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported game for this operation: {0}")]
    UnsupportedDomain(String),
    #[error("exact solver cannot handle this step: {0}")]
    ExactUnsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;
