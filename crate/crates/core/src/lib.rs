//! Forecasting toolkit for daily publication counts.
//!
//! The pipeline: parse record exports ([`ingest`]), build gap-free daily
//! series ([`series`]), select and fit an ARIMA model ([`arima`]), forecast
//! with Gaussian prediction intervals, and derive growth reports
//! ([`growth`]). [`simulate`] holds the seeded generators and Monte Carlo
//! harnesses used to check the interval machinery.

pub mod arima;
pub mod cli;
pub mod error;
pub mod growth;
pub mod ingest;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
