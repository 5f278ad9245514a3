use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{lo}, {hi}]: {reason} (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        lo: f64,
        hi: f64,
        reason: String,
        estimate: f64,
        error: f64,
    },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("truncation budget exhausted after {terms} terms at |u| = {modulus}: achieved bound {achieved:e}, requested {requested:e}")]
    TruncationBudget {
        modulus: f64,
        terms: usize,
        achieved: f64,
        requested: f64,
    },

    #[error("evaluation refused: |u| = {modulus} exceeds {limit}")]
    Refused { modulus: f64, limit: f64 },

    #[error("moment of order {0:e} cannot be resolved")]
    Resolution(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Io(_) | Error::Domain(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
