//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by panel construction, model building, estimation,
/// and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data (unparseable rows, invalid dates, duplicates).
    #[error("input error: {0}")]
    Input(String),

    /// A stamp ordering violation (e.g. indexing a stamp before the origin).
    #[error("ordering error: {0}")]
    Ordering(String),

    /// A level that must be strictly positive was not, so a log growth
    /// rate cannot be taken.
    #[error("transform error: series '{series}' at {stamp}: non-positive level {value}")]
    Transform {
        series: String,
        stamp: String,
        value: f64,
    },

    /// Too few observations to fit a regression or posterior.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Invalid model configuration.
    #[error("spec error: {0}")]
    Spec(String),

    /// Matrix dimensions do not line up while assembling a system.
    #[error("build error: {0}")]
    Build(String),

    /// A numerical failure (non-finite value, non-positive-definite matrix).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A conditional posterior degenerated (zero regressor variance etc).
    #[error("degenerate posterior: {0}")]
    Degenerate(String),

    /// Mid-chain estimation failure, annotated with the iteration index.
    #[error("estimation failed at iteration {iteration}: {message}")]
    Estimation { iteration: usize, message: String },

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem or formatting failure while reading/writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short category tag used in CLI error lines and exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Ordering(_) => "input",
            Error::Transform { .. } => "transform",
            Error::InsufficientData(_) => "input",
            Error::Spec(_) => "spec",
            Error::Build(_) => "build",
            Error::Numeric(_) => "numeric",
            Error::Degenerate(_) => "numeric",
            Error::Estimation { .. } => "estimation",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
