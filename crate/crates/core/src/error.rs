use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid exponent field: {0}")]
    InvalidExponent(String),

    #[error("invalid reaction profile: {0}")]
    InvalidReaction(String),

    #[error("parameter `{name}` out of range: {reason}")]
    OutOfRange { name: &'static str, reason: String },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("boundary values do not match the Dirichlet data at node {node}")]
    BoundaryMismatch { node: usize },

    #[error("field does not vanish on the boundary (node {node}, value {value})")]
    NonZeroBoundary { node: usize, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("solution not converged: {0}")]
    NotConverged(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
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
}
