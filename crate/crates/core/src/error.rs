use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular fit: smallest singular value {sigma_min:e} (ratio {ratio:e} to largest)")]
    SingularFit { sigma_min: f64, ratio: f64 },

    #[error("solver aborted at iteration {iteration} after {attempts} singular designs (last smallest singular value {sigma_min:e})")]
    SolverAbort {
        iteration: usize,
        attempts: usize,
        sigma_min: f64,
    },

    #[error("only {have} usable points for a fit that needs at least {need}")]
    InsufficientPoints { have: usize, need: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("numerical check failed: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::SingularFit { .. } => "singular_fit",
            Error::SolverAbort { .. } => "solver_abort",
            Error::InsufficientPoints { .. } => "insufficient_points",
            Error::Schema(_) => "schema",
            Error::UnsupportedMetric(_) => "unsupported_metric",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Numerical(_) => "numerical",
        }
    }

    /// Whether the error stems from user input rather than a numerical failure.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Schema(_) | Error::Config(_) | Error::UnsupportedMetric(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
