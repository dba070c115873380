use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain the operation accepts.
    #[error("invalid parameter: {0}")]
    Domain(String),

    /// Non-finite input or a numerical breakdown.
    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("no convergence after {iterations} iterations (residual norms {residuals:?})")]
    Convergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    /// The derivative of a singular value is undefined because it is not simple.
    #[error("singular value {index} is clustered; its derivative is undefined")]
    Degenerate { index: usize },

    #[error("fit aborted: {dropped} of {batch} samples had clustered singular values")]
    FitAborted { dropped: usize, batch: usize },

    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
