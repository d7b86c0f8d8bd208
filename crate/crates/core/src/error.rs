//! Crate-wide error type.

use thiserror::Error;

use crate::arima::ArimaCoefficients;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("cumulative series decreases at index {index}")]
    NonMonotonicCumulative { index: usize },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("missing required column `{column}`")]
    SchemaError { column: String },

    #[error("series spec `{spec}` selects no records")]
    EmptySelection { spec: String },

    /// The optimizer hit its iteration limit; `best` is the last accepted iterate.
    #[error("optimizer did not converge after {iterations} iterations")]
    ConvergenceFailure {
        iterations: usize,
        best: Box<ArimaCoefficients>,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no candidate model could be fitted")]
    NoModelFound,

    #[error("invalid horizon: {0}")]
    InvalidHorizon(String),

    #[error("forecast is on the wrong scale: {0}")]
    WrongScale(String),

    #[error("coefficients are not stationary/invertible")]
    InvalidCoefficients,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used in the CLI's stderr JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput => "empty_input",
            Error::NonMonotonicCumulative { .. } => "non_monotonic_cumulative",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::SchemaError { .. } => "schema_error",
            Error::EmptySelection { .. } => "empty_selection",
            Error::ConvergenceFailure { .. } => "convergence_failure",
            Error::NumericalFailure(_) => "numerical_failure",
            Error::NoModelFound => "no_model_found",
            Error::InvalidHorizon(_) => "invalid_horizon",
            Error::WrongScale(_) => "wrong_scale",
            Error::InvalidCoefficients => "invalid_coefficients",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io_error",
            Error::Csv(_) => "csv_error",
            Error::Json(_) => "json_error",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
