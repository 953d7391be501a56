use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the set on which the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} > tolerance {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    /// A truncation (span, frequency cutoff, ...) is too small for the requested accuracy.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("linear system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("root not found: {0}")]
    RootNotFound(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("estimate unavailable: {0}")]
    EstimateUnavailable(String),

    #[error("configuration error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config { line, msg: msg.into() }
    }

    /// True for errors caused by the user's input rather than by the numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
