use thiserror::Error;

/// Failure modes shared by every construction in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {re}{im:+}i lies on or within {tol:e} of the cut [-1, 1]")]
    OnCut { re: f64, im: f64, tol: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("recurrence coefficients did not settle under discretization doubling (max change {change:e})")]
    DiscretizationNonconvergence { change: f64 },

    #[error("quadrature did not converge under rule doubling (max change {change:e})")]
    QuadratureNonconvergence { change: f64 },

    #[error("quadrature rule with {nodes} nodes is too small for degree {degree}")]
    InsufficientRule { nodes: usize, degree: usize },

    #[error("singular linear system at n = {n} (condition estimate {cond:e}); index is pre-asymptotic")]
    SingularSystem { n: usize, cond: f64 },

    #[error("index n = {n} is pre-asymptotic: {reason}")]
    PreAsymptotic { n: usize, reason: String },

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("inner product is not regular: {0}")]
    NotRegular(String),

    #[error("approximation error {err:e} is below double-precision resolution")]
    Saturated { err: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
