use thiserror::Error;

/// Errors surfaced by estimation, parsing, and the iterative solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input (bad file, bad flag value, bad dimensions).
    #[error("input error: {0}")]
    Input(String),

    /// A numerical operation failed (singular submatrix, non-positive pivot, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A configured resource cap was exceeded (e.g. the maximal-clique cap).
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
