//! Growth analytics on observed and forecast series: linear trend with R²,
//! doubling dates, and fixed-offset horizon tables.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::arima::{Forecast, ForecastScale};
use crate::error::{Error, Result};
use crate::series::{DailySeries, SeriesKind};

pub const DEFAULT_OFFSETS: [usize; 4] = [90, 180, 270, 365];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Change per day.
    pub slope: f64,
    /// Fitted value at day index 0.
    pub intercept: f64,
    pub r2: f64,
    /// The series was constant; `r2` is reported as 1.
    pub degenerate: bool,
}

/// Least-squares line of value on day index (0-based).
pub fn linear_fit(series: &DailySeries) -> Result<LinearFit> {
    let y = series.values();
    let n = y.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut sst = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (v - y_mean);
        sxx += dx * dx;
        sst += (v - y_mean).powi(2);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    if sst == 0.0 {
        return Ok(LinearFit {
            slope,
            intercept,
            r2: 1.0,
            degenerate: true,
        });
    }
    let sse: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - intercept - slope * i as f64).powi(2))
        .sum();
    Ok(LinearFit {
        slope,
        intercept,
        r2: (1.0 - sse / sst).clamp(0.0, 1.0),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingResult {
    pub start_count: f64,
    pub target_factor: f64,
    pub point_date: Option<NaiveDate>,
    pub point_value: Option<f64>,
    pub upper_date: Option<NaiveDate>,
    pub upper_value: Option<f64>,
}

fn require_cumulative(forecast: &Forecast) -> Result<()> {
    if forecast.scale != ForecastScale::Original || forecast.kind != SeriesKind::Cumulative {
        return Err(Error::WrongScale("doubling needs a cumulative forecast on the original scale".into()));
    }
    Ok(())
}

/// First forecast day on which the point (and separately the upper bound)
/// reaches `factor · start_count`. No interpolation between days.
pub fn doubling_date(forecast: &Forecast, start_count: f64, factor: f64) -> Result<DoublingResult> {
    require_cumulative(forecast)?;
    if !(start_count > 0.0) {
        return Err(Error::InvalidArgument(format!("start count {start_count} must be positive")));
    }
    let target = factor * start_count;
    let crossing = |values: &[f64]| values.iter().position(|&v| v >= target).map(|i| (forecast.date(i), values[i]));
    let point = crossing(&forecast.point);
    let upper = crossing(&forecast.upper);
    Ok(DoublingResult {
        start_count,
        target_factor: factor,
        point_date: point.map(|p| p.0),
        point_value: point.map(|p| p.1),
        upper_date: upper.map(|p| p.0),
        upper_value: upper.map(|p| p.1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonStart {
    pub date: NaiveDate,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub offset_days: usize,
    pub date: NaiveDate,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

impl HorizonRow {
    pub fn point_factor(&self, start: f64) -> f64 {
        self.point / start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    pub series: String,
    pub start: HorizonStart,
    pub rows: Vec<HorizonRow>,
}

/// One row per day offset, read directly from the forecast vectors
/// (offset k is forecast index k − 1).
pub fn horizon_report(series_name: &str, forecast: &Forecast, offsets: &[usize]) -> Result<HorizonReport> {
    let mut offsets = offsets.to_vec();
    offsets.sort_unstable();
    offsets.dedup();
    let mut rows = Vec::with_capacity(offsets.len());
    for k in offsets {
        if k == 0 || k > forecast.horizon() {
            return Err(Error::InvalidHorizon(format!(
                "offset {k} outside forecast horizon 1..={}",
                forecast.horizon()
            )));
        }
        let i = k - 1;
        rows.push(HorizonRow {
            offset_days: k,
            date: forecast.date(i),
            point: forecast.point[i],
            lower: forecast.lower[i],
            upper: forecast.upper[i],
        });
    }
    Ok(HorizonReport {
        series: series_name.to_string(),
        start: HorizonStart {
            date: forecast.anchor_date,
            count: forecast.anchor_value,
        },
        rows,
    })
}

/// Converts calendar dates to offsets from the forecast anchor.
pub fn offsets_for_dates(forecast: &Forecast, dates: &[NaiveDate]) -> Result<Vec<usize>> {
    dates
        .iter()
        .map(|d| {
            let k = (*d - forecast.anchor_date).num_days();
            if k < 1 {
                Err(Error::InvalidHorizon(format!("{d} is not after the anchor {}", forecast.anchor_date)))
            } else {
                Ok(k as usize)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn linear_forecast(start: f64, per_day: f64, h: usize) -> Forecast {
        let point: Vec<f64> = (1..=h).map(|l| start + per_day * l as f64).collect();
        Forecast {
            anchor_date: day("2020-10-13"),
            anchor_value: start,
            level: 0.95,
            lower: point.iter().map(|v| v - 10.0).collect(),
            upper: point.iter().enumerate().map(|(i, v)| v + 2.0 * i as f64).collect(),
            point,
            scale: ForecastScale::Original,
            kind: SeriesKind::Cumulative,
        }
    }

    #[test]
    fn exact_line() {
        let s = DailySeries::from_values(day("2020-01-01"), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let f = linear_fit(&s).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_is_degenerate() {
        let s = DailySeries::from_values(day("2020-01-01"), vec![4.0; 5]).unwrap();
        let f = linear_fit(&s).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn matches_normal_equations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = (0..200).map(|i| 0.3 * i as f64 + rng.random_range(-20.0..20.0)).collect();
        let fit = linear_fit(&DailySeries::from_values(day("2020-01-01"), y.clone()).unwrap()).unwrap();
        // (XᵀX)⁻¹ Xᵀy with X = [1, t].
        let n = y.len() as f64;
        let st: f64 = (0..200).map(|i| i as f64).sum();
        let stt: f64 = (0..200).map(|i| (i * i) as f64).sum();
        let sy: f64 = y.iter().sum();
        let sty: f64 = y.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
        let det = n * stt - st * st;
        let intercept = (stt * sy - st * sty) / det;
        let slope = (n * sty - st * sy) / det;
        assert!((fit.slope - slope).abs() < 1e-9);
        assert!((fit.intercept - intercept).abs() < 1e-9);
    }

    #[test]
    fn doubling_on_linear_forecast() {
        let f = linear_forecast(1000.0, 1000.0 / 243.0, 365);
        let d = doubling_date(&f, 1000.0, 2.0).unwrap();
        assert_eq!(d.point_date, Some(day("2020-10-13") + chrono::Days::new(243)));
        assert!(d.upper_date.unwrap() <= d.point_date.unwrap());
    }

    #[test]
    fn doubling_never_reached() {
        let f = linear_forecast(1000.0, 0.1, 30);
        let d = doubling_date(&f, 1000.0, 2.0).unwrap();
        assert_eq!(d.point_date, None);
    }

    #[test]
    fn doubling_needs_cumulative() {
        let mut f = linear_forecast(10.0, 1.0, 10);
        f.kind = SeriesKind::Increments;
        assert!(matches!(doubling_date(&f, 10.0, 2.0), Err(Error::WrongScale(_))));
    }

    #[test]
    fn horizon_rows_are_direct_reads() {
        let f = linear_forecast(500.0, 2.0, 365);
        let r = horizon_report("x", &f, &DEFAULT_OFFSETS).unwrap();
        assert_eq!(r.rows.len(), 4);
        for row in &r.rows {
            let i = row.offset_days - 1;
            assert_eq!(row.point, f.point[i]);
            assert_eq!(row.upper, f.upper[i]);
            assert_eq!(row.lower, f.lower[i]);
        }
        let one = horizon_report("x", &f, &[1]).unwrap();
        assert_eq!(one.rows[0].point, f.point[0]);
        assert_eq!(one.rows[0].date, f.date(0));
        assert!(matches!(horizon_report("x", &f, &[366]), Err(Error::InvalidHorizon(_))));
    }

    #[test]
    fn explicit_dates() {
        let f = linear_forecast(500.0, 2.0, 365);
        let offs = offsets_for_dates(&f, &[day("2021-01-11"), day("2021-09-14")]).unwrap();
        assert_eq!(offs, vec![90, 336]);
    }

    proptest! {
        #[test]
        fn r2_affine_invariant(y in prop::collection::vec(-100.0f64..100.0, 5..60), a in 0.1f64..50.0, neg in any::<bool>(), b in -1e3f64..1e3) {
            let a = if neg { -a } else { a };
            let s = DailySeries::from_values(day("2020-01-01"), y.clone()).unwrap();
            let t = s.map_values(|v| a * v + b);
            let (f1, f2) = (linear_fit(&s).unwrap(), linear_fit(&t).unwrap());
            prop_assume!(!f1.degenerate);
            prop_assert!((f1.r2 - f2.r2).abs() < 1e-9);
        }

        #[test]
        fn doubling_monotone(bump in prop::collection::vec(0.0f64..50.0, 100), per_day in 1.0f64..30.0) {
            let f = linear_forecast(1000.0, per_day, 100);
            let mut g = f.clone();
            for (v, b) in g.point.iter_mut().zip(&bump) {
                *v += b;
            }
            let (d1, d2) = (doubling_date(&f, 1000.0, 2.0).unwrap(), doubling_date(&g, 1000.0, 2.0).unwrap());
            if let Some(p1) = d1.point_date {
                prop_assert!(d2.point_date.unwrap() <= p1);
            }
        }
    }
}
