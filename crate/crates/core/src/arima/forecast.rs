//! Point forecasts and Gaussian prediction intervals.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::kalman::StateSpace;
use super::poly::arima_psi_weights;
use super::FittedModel;
use crate::error::{Error, Result};
use crate::series::{add_days, extend_from_tails, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecastScale {
    Original,
    Differenced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// Last observed day; `point[i]` is for `anchor_date + i + 1`.
    pub anchor_date: NaiveDate,
    /// Last observed value on the forecast's scale.
    pub anchor_value: f64,
    pub level: f64,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub scale: ForecastScale,
    pub kind: SeriesKind,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.point.len()
    }

    pub fn date(&self, index: usize) -> NaiveDate {
        add_days(self.anchor_date, index as i64 + 1)
    }

    pub fn half_width(&self, index: usize) -> f64 {
        0.5 * (self.upper[index] - self.lower[index])
    }

    /// Forecast standard deviation implied by the interval.
    pub fn std_dev(&self, index: usize) -> f64 {
        self.half_width(index) / standard_normal_quantile(0.5 + 0.5 * self.level)
    }

    /// Floor used by the clamped columns: the anchor for cumulative totals,
    /// zero for daily counts.
    pub fn clamp_floor(&self) -> f64 {
        match self.kind {
            SeriesKind::Cumulative => self.anchor_value,
            SeriesKind::Increments => 0.0,
        }
    }

    pub fn point_clamped(&self) -> Vec<f64> {
        let floor = self.clamp_floor();
        self.point.iter().map(|v| v.max(floor)).collect()
    }

    pub fn lower_clamped(&self) -> Vec<f64> {
        let floor = self.clamp_floor();
        self.lower.iter().map(|v| v.max(floor)).collect()
    }
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

fn check(h: usize, level: f64) -> Result<f64> {
    if h == 0 {
        return Err(Error::InvalidHorizon("horizon must be at least one day".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level {level} outside (0, 1)")));
    }
    Ok(standard_normal_quantile(0.5 + 0.5 * level))
}

/// Conditional expectations of the differenced series for leads 1..=h.
fn differenced_path(model: &FittedModel, h: usize) -> Vec<f64> {
    let c = &model.coefficients;
    let mu = if model.order.with_constant { c.mean() } else { 0.0 };
    let ss = StateSpace::new(&c.phi, &c.theta);
    let mut state = model.state.next_state.clone();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        out.push(mu + state[0]);
        state = ss.step(&state);
    }
    out
}

/// Lead-time variances σ²·Σ_{j<ℓ} ψ̃_j² for the operator with `d` unit roots.
fn lead_variances(model: &FittedModel, d: usize, h: usize) -> Vec<f64> {
    let c = &model.coefficients;
    let sigma2 = if model.degenerate { 0.0 } else { c.sigma2 };
    let psi = arima_psi_weights(&c.phi, &c.theta, d, h.saturating_sub(1));
    let mut acc = 1.0;
    let mut out = Vec::with_capacity(h);
    out.push(sigma2);
    for w in psi {
        acc += w * w;
        out.push(sigma2 * acc);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: &FittedModel,
    point: Vec<f64>,
    variances: Vec<f64>,
    z: f64,
    level: f64,
    anchor_value: f64,
    scale: ForecastScale,
    kind: SeriesKind,
) -> Forecast {
    let (lower, upper) = point
        .iter()
        .zip(&variances)
        .map(|(p, v)| {
            let half = z * v.sqrt();
            (p - half, p + half)
        })
        .unzip();
    Forecast {
        anchor_date: model.anchor_date(),
        anchor_value,
        level,
        point,
        lower,
        upper,
        scale,
        kind,
    }
}

/// Forecasts `h` days ahead on the original scale of the fitted series.
pub fn forecast(model: &FittedModel, h: usize, level: f64) -> Result<Forecast> {
    let z = check(h, level)?;
    let point = extend_from_tails(&model.state.tails, &differenced_path(model, h));
    let variances = lead_variances(model, model.order.d, h);
    Ok(assemble(
        model,
        point,
        variances,
        z,
        level,
        model.last_value(),
        ForecastScale::Original,
        model.series_meta.kind,
    ))
}

/// Forecasts on the differenced scale (no integration).
pub fn forecast_differenced(model: &FittedModel, h: usize, level: f64) -> Result<Forecast> {
    let z = check(h, level)?;
    let point = differenced_path(model, h);
    let variances = lead_variances(model, 0, h);
    Ok(assemble(
        model,
        point,
        variances,
        z,
        level,
        f64::NAN,
        ForecastScale::Differenced,
        SeriesKind::Increments,
    ))
}

/// Forecasts the running total of a model fitted to daily increments.
///
/// `cumulative_anchor` is the total up to and including the last observed
/// day. The accumulation adds one more unit root to the interval operator.
pub fn forecast_accumulated(model: &FittedModel, h: usize, level: f64, cumulative_anchor: f64) -> Result<Forecast> {
    if model.series_meta.kind != SeriesKind::Increments {
        return Err(Error::WrongScale("accumulation needs a model of daily increments".into()));
    }
    let z = check(h, level)?;
    let mut tails = vec![cumulative_anchor];
    tails.extend_from_slice(&model.state.tails);
    let point = extend_from_tails(&tails, &differenced_path(model, h));
    let variances = lead_variances(model, model.order.d + 1, h);
    Ok(assemble(
        model,
        point,
        variances,
        z,
        level,
        cumulative_anchor,
        ForecastScale::Original,
        SeriesKind::Cumulative,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arima::{fit_with_coefficients, ArimaCoefficients, ArimaOrder};
    use crate::series::DailySeries;

    fn walk(n: usize) -> DailySeries {
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() * 3.0 + i as f64).collect();
        DailySeries::from_values("2020-02-01".parse().unwrap(), v).unwrap()
    }

    #[test]
    fn random_walk_with_drift_closed_form() {
        let s = walk(80);
        let (c, sigma2) = (1.25, 2.0);
        let m = fit_with_coefficients(
            &s,
            &ArimaOrder::new(0, 1, 0, true),
            &ArimaCoefficients::new(vec![], vec![], c, sigma2),
        )
        .unwrap();
        let f = forecast(&m, 365, 0.95).unwrap();
        let y = s.last();
        for l in 1..=365 {
            let i = l - 1;
            assert!((f.point[i] - (y + c * l as f64)).abs() < 1e-8);
            let want = 1.959963984540054 * (sigma2 * l as f64).sqrt();
            assert!((f.half_width(i) / want - 1.0).abs() < 1e-9);
        }
        assert_eq!(f.date(0), s.date_at(s.len()));
    }

    #[test]
    fn iid_forecast_is_mean() {
        let s = walk(30);
        let m = fit_with_coefficients(
            &s,
            &ArimaOrder::new(0, 0, 0, false),
            &ArimaCoefficients::new(vec![], vec![], 0.0, 1.0),
        )
        .unwrap();
        let f = forecast(&m, 5, 0.9).unwrap();
        assert!(f.point.iter().all(|&v| v == 0.0));
        assert!(f.half_width(0) == f.half_width(4));
    }

    #[test]
    fn zero_horizon_rejected() {
        let s = walk(30);
        let m = fit_with_coefficients(
            &s,
            &ArimaOrder::new(0, 0, 0, false),
            &ArimaCoefficients::new(vec![], vec![], 0.0, 1.0),
        )
        .unwrap();
        assert!(matches!(forecast(&m, 0, 0.95), Err(Error::InvalidHorizon(_))));
    }

    #[test]
    fn ar1_point_decays_to_mean() {
        let s = walk(50);
        let coeffs = ArimaCoefficients::new(vec![0.5], vec![], 2.0, 1.0);
        let m = fit_with_coefficients(&s, &ArimaOrder::new(1, 0, 0, true), &coeffs).unwrap();
        let f = forecast(&m, 40, 0.95).unwrap();
        // With φ = 0.5 the first forecast is c + φ·y_T for an AR(1).
        assert!((f.point[0] - (2.0 + 0.5 * s.last())).abs() < 1e-9);
        assert!((f.point[39] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn accumulated_adds_unit_root() {
        let inc = DailySeries::new(
            "2020-01-01".parse().unwrap(),
            (0..40).map(|i| (i % 5) as f64 + 3.0).collect(),
            SeriesKind::Increments,
        )
        .unwrap();
        let m = fit_with_coefficients(
            &inc,
            &ArimaOrder::new(0, 0, 0, true),
            &ArimaCoefficients::new(vec![], vec![], 5.0, 4.0),
        )
        .unwrap();
        let f = forecast_accumulated(&m, 10, 0.95, 200.0).unwrap();
        for l in 1..=10 {
            assert!((f.point[l - 1] - (200.0 + 5.0 * l as f64)).abs() < 1e-9);
            let want = standard_normal_quantile(0.975) * (4.0 * l as f64).sqrt();
            assert!((f.half_width(l - 1) - want).abs() < 1e-9);
        }
        assert_eq!(f.kind, SeriesKind::Cumulative);
    }

    #[test]
    fn intervals_ordered_and_widening() {
        use crate::arima::estimate_mle;
        use crate::simulate::{simulate_arima, SimulationSpec};
        let order = ArimaOrder::new(1, 1, 1, true);
        let spec = SimulationSpec::new(order, ArimaCoefficients::new(vec![0.4], vec![0.3], 0.2, 1.0), 300, 3);
        let m = estimate_mle(&simulate_arima(&spec).unwrap(), &order).unwrap();
        let f = forecast(&m, 400, 0.95).unwrap();
        for i in 0..400 {
            assert!(f.lower[i] <= f.point[i] && f.point[i] <= f.upper[i]);
            if i > 0 {
                assert!(f.half_width(i) >= f.half_width(i - 1));
            }
        }
        let g = forecast(&m, 400, 0.8).unwrap();
        assert!(g.half_width(10) < f.half_width(10));
    }
}
