use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants are grouped the same way the command-line front end maps them
/// to exit codes: argument domain, quadrature, collision, convergence.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("weight is singular at s = {s}")]
    Singularity { s: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("bodies {i} and {j} collide (distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("infinite action: {0}")]
    InfiniteAction(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("configuration mismatch: {0}")]
    Configuration(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
