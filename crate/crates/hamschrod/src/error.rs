//! Error taxonomy for the whole pipeline, with a stable mapping to process
//! exit codes for the command-line front end.

use thiserror::Error;

/// Every failure mode the library can surface.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid spatial or temporal domain parameters.
    #[error("domain error: {0}")]
    Domain(String),

    /// A differentiation scheme was requested that the grid cannot support
    /// (e.g. spectral differentiation on a non-periodic grid) or a derivative
    /// order beyond the implementation cap.
    #[error("scheme error: {0}")]
    Scheme(String),

    /// An operator expression failed the linearity requirement of a context
    /// that demands a linear operator.
    #[error("linearity error: {0}")]
    Linearity(String),

    /// A series order was requested that the homotopy series does not hold.
    #[error("order error: {0}")]
    Order(String),

    /// Invalid engine configuration (zero convergence-control parameter,
    /// inconsistent grids, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Nonzero initial data appeared at an order where the guess policy
    /// guarantees homogeneous initial conditions.
    #[error("guess error: {0}")]
    Guess(String),

    /// The residual grew past the divergence guard across consecutive orders.
    #[error("divergence: {0}")]
    Divergence(String),

    /// Integration produced non-finite values.
    #[error("non-finite state: {0}")]
    NonFinite(String),

    /// Eigenvalue computation failed to converge.
    #[error("eigenvalue failure: {0}")]
    EigenFailure(String),

    /// The warped auxiliary domain is too small: transport would wrap around
    /// the periodic boundary and contaminate the recovery point.
    #[error("wrap error: {0}")]
    Wrap(String),

    /// Malformed input document (JSON syntax or structural problems), with a
    /// JSON-pointer path to the offending location.
    #[error("parse error at {pointer}: {message}")]
    Parse { pointer: String, message: String },

    /// Semantically invalid configuration; lists every violation found.
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    /// An empty residual curve was handed to the selector.
    #[error("empty curve: {0}")]
    EmptyCurve(String),

    /// Every point of a residual curve diverged.
    #[error("all sweep points diverged: {0}")]
    AllDiverged(String),

    /// Filesystem or serialization failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure outside of config parsing.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end: 0 is success (never
    /// produced here), 2 flags divergence, 3 flags a backend failure during
    /// integration, and every other error maps to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence(_) => 2,
            Error::NonFinite(_) | Error::EigenFailure(_) | Error::Wrap(_) => 3,
            _ => 1,
        }
    }

    /// Stable machine-readable tag for structured diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Scheme(_) => "scheme",
            Error::Linearity(_) => "linearity",
            Error::Order(_) => "order",
            Error::Config(_) => "config",
            Error::Guess(_) => "guess",
            Error::Divergence(_) => "divergence",
            Error::NonFinite(_) => "non_finite",
            Error::EigenFailure(_) => "eigen_failure",
            Error::Wrap(_) => "wrap",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::EmptyCurve(_) => "empty_curve",
            Error::AllDiverged(_) => "all_diverged",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
