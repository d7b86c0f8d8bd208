//! ARIMA(p,d,q) estimation, order selection and forecasting.
//!
//! Estimation works on the d-times differenced series. The constant is an
//! intercept on that scale, so the process mean is `constant / (1 - Σφ)`; with
//! `d = 1` and no AR terms the constant is the daily drift.
//!
//! Fitting runs conditional sum of squares first, then maximizes the exact
//! Gaussian likelihood from a Kalman filter over the state-space form,
//! searching in a reparametrized space that keeps every iterate stationary
//! and invertible.

mod estimate;
mod forecast;
mod kalman;
mod kpss;
mod optim;
mod poly;
mod select;
mod transform;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SeriesKind;

pub use estimate::{estimate_css, estimate_mle, log_likelihood};
pub use forecast::{forecast, forecast_accumulated, forecast_differenced, standard_normal_quantile, Forecast, ForecastScale};
pub use kpss::{kpss_critical_value, kpss_lag, kpss_statistic, select_d};
pub use optim::{minimize_bfgs, BfgsOptions, Minimum};
pub use poly::{
    ar_times_unit_roots, arima_psi_weights, is_invertible, is_stationary, psi_weights, ROOT_MARGIN,
};
pub use select::{select_order, select_order_with, starting_orders, CandidateScore, SelectOptions, Selection};
pub use transform::{from_partial_autocorrelations, to_partial_autocorrelations};

pub const DEFAULT_P_MAX: usize = 5;
pub const DEFAULT_Q_MAX: usize = 5;
pub const MAX_D: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub with_constant: bool,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize, with_constant: bool) -> Self {
        Self {
            p,
            d,
            q,
            with_constant,
        }
    }

    /// Estimated parameter count: ARMA terms, constant, innovation variance.
    pub fn n_params(&self) -> usize {
        self.p + self.q + usize::from(self.with_constant) + 1
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.d > MAX_D {
            return Err(Error::InvalidArgument(format!("d = {} exceeds {MAX_D}", self.d)));
        }
        if self.d == 2 && self.with_constant {
            return Err(Error::InvalidArgument("no constant allowed with d = 2".into()));
        }
        Ok(())
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)?;
        if self.with_constant {
            f.write_str(" with constant")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaCoefficients {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub constant: f64,
    pub sigma2: f64,
}

impl ArimaCoefficients {
    pub fn new(phi: Vec<f64>, theta: Vec<f64>, constant: f64, sigma2: f64) -> Self {
        Self {
            phi,
            theta,
            constant,
            sigma2,
        }
    }

    /// Mean of the (differenced) process implied by the intercept.
    pub fn mean(&self) -> f64 {
        self.constant / (1.0 - self.phi.iter().sum::<f64>())
    }

    pub fn is_valid(&self) -> bool {
        is_stationary(&self.phi) && is_invertible(&self.theta)
    }

    pub(crate) fn check_shape(&self, order: &ArimaOrder) -> Result<()> {
        if self.phi.len() != order.p || self.theta.len() != order.q {
            return Err(Error::InvalidArgument(format!(
                "coefficient lengths ({}, {}) do not match {order}",
                self.phi.len(),
                self.theta.len()
            )));
        }
        if !order.with_constant && self.constant != 0.0 {
            return Err(Error::InvalidArgument(format!("{order} has no constant term")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub start_date: NaiveDate,
    pub length: usize,
    pub kind: SeriesKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Exact maximum likelihood.
    Mle,
    /// Conditional sum of squares, used when likelihood maximization failed.
    CssFallback,
    /// Closed form for a constant differenced series.
    Degenerate,
    /// Coefficients given by the caller.
    Supplied,
}

/// What the forecaster needs from the end of the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    /// Predicted state for the first out-of-sample day (mean-adjusted, differenced scale).
    pub next_state: Vec<f64>,
    /// Last value at each differencing level below `d`.
    pub tails: Vec<f64>,
    pub last_observation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub order: ArimaOrder,
    pub coefficients: ArimaCoefficients,
    pub loglik: f64,
    pub aicc: f64,
    /// Standardized one-step prediction errors, one per differenced observation.
    pub residuals: Vec<f64>,
    pub series_meta: SeriesMeta,
    pub method: FitMethod,
    pub converged: bool,
    pub degenerate: bool,
    pub state: FilterState,
}

impl FittedModel {
    pub fn anchor_date(&self) -> NaiveDate {
        crate::series::add_days(self.series_meta.start_date, self.series_meta.length as i64 - 1)
    }

    pub fn last_value(&self) -> f64 {
        self.state.last_observation
    }
}

/// AICc = −2·loglik + 2k·n/(n−k−1).
pub fn aicc(loglik: f64, n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    -2.0 * loglik + 2.0 * k * n / (n - k - 1.0)
}

pub use estimate::fit_with_coefficients;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aicc_matches_aic_plus_correction() {
        let (ll, n, k) = (-123.4, 50usize, 3usize);
        let aic = -2.0 * ll + 2.0 * k as f64;
        let corr = 2.0 * (k * (k + 1)) as f64 / (n - k - 1) as f64;
        assert!((aicc(ll, n, k) - (aic + corr)).abs() < 1e-12);
    }

    #[test]
    fn intercept_and_mean() {
        let c = ArimaCoefficients::new(vec![0.8], vec![], 1.0, 1.0);
        assert!((c.mean() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn order_validation() {
        assert!(ArimaOrder::new(1, 3, 0, false).validate().is_err());
        assert!(ArimaOrder::new(1, 2, 0, true).validate().is_err());
        assert!(ArimaOrder::new(1, 2, 0, false).validate().is_ok());
        assert_eq!(ArimaOrder::new(2, 1, 1, true).n_params(), 5);
    }
}
