use thiserror::Error;

use crate::fitting::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested target cannot be reached by the model.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A statistical estimate could not be formed from the data.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Every optimizer start hit its iteration cap; carries the best point seen.
    #[error("fit did not converge after {} iterations (objective {:.3e})", .best.iterations, .best.objective_value)]
    NonConvergence { best: Box<FitResult> },

    #[error("wrong operation: {0}")]
    WrongOperation(String),

    /// The request would allocate more than the configured guard allows.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid {field}: {message}")]
    Schema { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn schema(field: &str, msg: impl Into<String>) -> Self {
        Error::Schema {
            field: field.to_string(),
            message: msg.into(),
        }
    }
}
