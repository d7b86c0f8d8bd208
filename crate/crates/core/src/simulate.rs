//! Seeded ARIMA simulation, Monte Carlo interval checks and rolling-origin
//! backtests.
//!
//! All randomness comes from ChaCha20 streams seeded with a `u64`. Per-path
//! seeds are derived with SplitMix64 from `(seed, path_index)`, so results do
//! not depend on how paths are scheduled across threads.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arima::{
    estimate_mle, fit_with_coefficients, forecast, select_order_with, ArimaCoefficients, ArimaOrder, Forecast,
    SelectOptions,
};
use crate::error::{Error, Result};
use crate::series::DailySeries;

/// Identifier of the generator, recorded alongside simulated outputs.
pub const RNG_ALGORITHM: &str = "chacha20 (rand_chacha 0.9, seed_from_u64); path seeds splitmix64(seed, index)";

pub const DEFAULT_BURN_IN: usize = 200;

/// Day 0 of every simulated series.
pub fn simulation_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub order: ArimaOrder,
    pub coefficients: ArimaCoefficients,
    pub n: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl SimulationSpec {
    pub fn new(order: ArimaOrder, coefficients: ArimaCoefficients, n: usize, seed: u64) -> Self {
        Self {
            order,
            coefficients,
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    fn validate(&self) -> Result<()> {
        self.order.validate()?;
        self.coefficients.check_shape(&self.order)?;
        if !self.coefficients.is_valid() || !(self.coefficients.sigma2 >= 0.0) {
            return Err(Error::InvalidCoefficients);
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over `seed` and `index`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn innovations(rng: &mut ChaCha20Rng, sigma2: f64, n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma2.sqrt()).expect("finite variance");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Stationary ARMA draws and the innovations that produced them, after burn-in.
pub fn simulate_arma(spec: &SimulationSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let c = &spec.coefficients;
    let mu = if spec.order.with_constant { c.mean() } else { 0.0 };
    let total = spec.burn_in + spec.n;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let e = innovations(&mut rng, c.sigma2, total);
    let mut x = Vec::with_capacity(total);
    for t in 0..total {
        let mut v = c.constant + e[t];
        for (i, f) in c.phi.iter().enumerate() {
            v += f * if t > i { x[t - 1 - i] } else { mu };
        }
        for (j, th) in c.theta.iter().enumerate() {
            if t > j {
                v += th * e[t - 1 - j];
            }
        }
        x.push(v);
    }
    Ok((x[spec.burn_in..].to_vec(), e[spec.burn_in..].to_vec()))
}

/// Simulates the series: ARMA on the differenced scale, integrated `d`
/// times from zero.
pub fn simulate_arima(spec: &SimulationSpec) -> Result<DailySeries> {
    let (mut x, _) = simulate_arma(spec)?;
    for _ in 0..spec.order.d {
        let mut acc = 0.0;
        for v in x.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    DailySeries::from_values(simulation_start(), x)
}

/// Monte Carlo continuations of a stationary ARMA process.
///
/// `history_x` and `history_e` are the observed values and their innovations;
/// each returned path holds the next `h` values. No psi weights are involved.
pub fn simulate_continuations(
    coefficients: &ArimaCoefficients,
    history_x: &[f64],
    history_e: &[f64],
    h: usize,
    n_paths: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let c = coefficients;
    (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha20Rng::seed_from_u64(mix_seed(seed, path as u64));
            let fresh = innovations(&mut rng, c.sigma2, h);
            let mut x = history_x.to_vec();
            let mut e = history_e.to_vec();
            for &eps in &fresh {
                let t = x.len();
                let mut v = c.constant + eps;
                for (i, f) in c.phi.iter().enumerate() {
                    v += f * x[t - 1 - i];
                }
                for (j, th) in c.theta.iter().enumerate() {
                    v += th * e[t - 1 - j];
                }
                x.push(v);
                e.push(eps);
            }
            x[history_x.len()..].to_vec()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageFit {
    /// Re-estimate the true order on every path.
    Estimate,
    /// Use the generating coefficients.
    TrueCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub coverage: f64,
    pub hits: usize,
    pub evaluated: usize,
    /// Paths whose fit or forecast failed; excluded from `coverage`.
    pub failed: usize,
    pub rng: String,
}

/// Fraction of paths whose value at lead `h` falls inside the `level`
/// interval, refitting the true order on each path.
pub fn empirical_coverage(spec: &SimulationSpec, h: usize, level: f64, n_paths: usize, seed: u64) -> Result<CoverageReport> {
    empirical_coverage_with(spec, h, level, n_paths, seed, CoverageFit::Estimate)
}

pub fn empirical_coverage_with(
    spec: &SimulationSpec,
    h: usize,
    level: f64,
    n_paths: usize,
    seed: u64,
    fit: CoverageFit,
) -> Result<CoverageReport> {
    if n_paths < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 paths, got {n_paths}")));
    }
    if h == 0 {
        return Err(Error::InvalidHorizon("horizon must be at least one day".into()));
    }
    spec.validate()?;
    let outcomes: Vec<Option<bool>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let path_spec = SimulationSpec {
                n: spec.n + h,
                seed: mix_seed(seed, path as u64),
                ..spec.clone()
            };
            let full = simulate_arima(&path_spec).ok()?;
            let train = full.prefix(spec.n).ok()?;
            let model = match fit {
                CoverageFit::Estimate => estimate_mle(&train, &spec.order).ok()?,
                CoverageFit::TrueCoefficients => fit_with_coefficients(&train, &spec.order, &spec.coefficients).ok()?,
            };
            let f = forecast(&model, h, level).ok()?;
            let actual = full.values()[spec.n + h - 1];
            Some(f.lower[h - 1] <= actual && actual <= f.upper[h - 1])
        })
        .collect();
    let evaluated = outcomes.iter().filter(|o| o.is_some()).count();
    let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
    if evaluated == 0 {
        return Err(Error::NoModelFound);
    }
    Ok(CoverageReport {
        coverage: hits as f64 / evaluated as f64,
        hits,
        evaluated,
        failed: n_paths - evaluated,
        rng: RNG_ALGORITHM.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktestConfig {
    pub initial_window: usize,
    pub step: usize,
    pub h: usize,
    pub level: f64,
    pub select: SelectOptions,
}

impl BacktestConfig {
    pub fn new(initial_window: usize, step: usize, h: usize) -> Self {
        Self {
            initial_window,
            step,
            h,
            level: 0.95,
            select: SelectOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRecord {
    /// Number of observations the model was fitted on.
    pub origin_index: usize,
    pub horizon: usize,
    pub point: f64,
    pub actual: f64,
    /// `actual − point`.
    pub point_error: f64,
    pub interval_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestAggregates {
    /// Mean absolute percentage error in percent, over records with a non-zero actual.
    pub mape: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub records: Vec<BacktestRecord>,
    pub aggregates: BacktestAggregates,
    pub failed_origins: Vec<usize>,
}

/// Fits on the first `origin` observations only and forecasts `h` days.
pub fn forecast_from_prefix(series: &DailySeries, origin: usize, h: usize, level: f64, opts: &SelectOptions) -> Result<Forecast> {
    let train = series.prefix(origin)?;
    let model = select_order_with(&train, opts)?.model;
    forecast(&model, h, level)
}

pub fn rolling_backtest(series: &DailySeries, config: &BacktestConfig) -> Result<BacktestReport> {
    let BacktestConfig {
        initial_window,
        step,
        h,
        level,
        ..
    } = *config;
    if h == 0 || step == 0 {
        return Err(Error::InvalidArgument("step and horizon must be positive".into()));
    }
    if initial_window + h > series.len() {
        return Err(Error::InsufficientData {
            needed: initial_window + h,
            got: series.len(),
        });
    }
    let origins: Vec<usize> = (initial_window..=series.len() - h).step_by(step).collect();
    let per_origin: Vec<(usize, Result<Forecast>)> = origins
        .par_iter()
        .map(|&o| (o, forecast_from_prefix(series, o, h, level, &config.select)))
        .collect();

    let values = series.values();
    let mut records = Vec::new();
    let mut failed_origins = Vec::new();
    for (origin, result) in per_origin {
        let Ok(f) = result else {
            failed_origins.push(origin);
            continue;
        };
        for l in 1..=h {
            let actual = values[origin + l - 1];
            let point = f.point[l - 1];
            records.push(BacktestRecord {
                origin_index: origin,
                horizon: l,
                point,
                actual,
                point_error: actual - point,
                interval_hit: f.lower[l - 1] <= actual && actual <= f.upper[l - 1],
            });
        }
    }
    if records.is_empty() {
        return Err(Error::NoModelFound);
    }
    let pct: Vec<f64> = records
        .iter()
        .filter(|r| r.actual != 0.0)
        .map(|r| (r.point_error / r.actual).abs() * 100.0)
        .collect();
    let mape = if pct.is_empty() { 0.0 } else { pct.iter().sum::<f64>() / pct.len() as f64 };
    let coverage = records.iter().filter(|r| r.interval_hit).count() as f64 / records.len() as f64;
    Ok(BacktestReport {
        records,
        aggregates: BacktestAggregates { mape, coverage },
        failed_origins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arima::select_d;

    fn spec(order: ArimaOrder, phi: Vec<f64>, theta: Vec<f64>, c: f64, s2: f64, n: usize, seed: u64) -> SimulationSpec {
        SimulationSpec::new(order, ArimaCoefficients::new(phi, theta, c, s2), n, seed)
    }

    #[test]
    fn deterministic_for_seed() {
        let s = spec(ArimaOrder::new(1, 1, 1, false), vec![0.5], vec![0.3], 0.0, 1.0, 300, 9);
        assert_eq!(simulate_arima(&s).unwrap(), simulate_arima(&s).unwrap());
        let other = SimulationSpec { seed: 10, ..s.clone() };
        assert_ne!(simulate_arima(&s).unwrap(), simulate_arima(&other).unwrap());
    }

    #[test]
    fn ar1_stationary_mean() {
        let s = spec(ArimaOrder::new(1, 0, 0, true), vec![0.8], vec![], 1.0, 1.0, 100_000, 1);
        let x = simulate_arima(&s).unwrap();
        let mean = x.values().iter().sum::<f64>() / x.len() as f64;
        assert!((mean - 5.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn iid_variance() {
        let s = spec(ArimaOrder::new(0, 0, 0, false), vec![], vec![], 0.0, 4.0, 100_000, 2);
        let x = simulate_arima(&s).unwrap();
        let n = x.len() as f64;
        let mean = x.values().iter().sum::<f64>() / n;
        let var = x.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 4.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn rejects_explosive_coefficients() {
        let s = spec(ArimaOrder::new(1, 0, 0, false), vec![1.1], vec![], 0.0, 1.0, 10, 0);
        assert!(matches!(simulate_arima(&s), Err(Error::InvalidCoefficients)));
    }

    #[test]
    fn integration_order() {
        let s = spec(ArimaOrder::new(0, 2, 0, false), vec![], vec![], 0.0, 1.0, 50, 3);
        let (x, _) = simulate_arma(&s).unwrap();
        let y = simulate_arima(&s).unwrap();
        let d = crate::series::difference(&y, 2).unwrap();
        for (a, b) in d.values.iter().zip(&x[2..]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn seed_mixing_spreads() {
        let a: std::collections::HashSet<u64> = (0..1000).map(|i| mix_seed(42, i)).collect();
        assert_eq!(a.len(), 1000);
    }

    #[test]
    fn stationary_simulations_need_no_differencing() {
        let hits = (0..100)
            .filter(|&seed| {
                let s = spec(ArimaOrder::new(1, 0, 1, true), vec![0.3], vec![0.2], 2.0, 1.0, 500, seed);
                select_d(&simulate_arima(&s).unwrap(), 0.05, 2).unwrap() == 0
            })
            .count();
        assert!(hits >= 90, "{hits}");
    }

    #[test]
    fn known_variance_one_step_coverage() {
        let s = spec(ArimaOrder::new(0, 0, 0, false), vec![], vec![], 0.0, 1.0, 50, 0);
        let r = empirical_coverage_with(&s, 1, 0.95, 4000, 5, CoverageFit::TrueCoefficients).unwrap();
        assert!((r.coverage - 0.95).abs() <= 0.015, "{r:?}");
        assert_eq!(r.failed, 0);
    }

    #[test]
    fn wide_level_on_white_noise() {
        let s = spec(ArimaOrder::new(0, 0, 0, true), vec![], vec![], 0.0, 1.0, 100, 0);
        let r = empirical_coverage(&s, 5, 0.999, 1000, 8).unwrap();
        assert!(r.coverage >= 0.99, "{r:?}");
    }

    #[test]
    fn coverage_needs_paths() {
        let s = spec(ArimaOrder::new(0, 0, 0, false), vec![], vec![], 0.0, 1.0, 50, 0);
        assert!(empirical_coverage(&s, 1, 0.95, 10, 0).is_err());
    }

    #[test]
    fn linear_backtest_is_exact() {
        let v: Vec<f64> = (0..120).map(|i| 50.0 + 7.0 * i as f64).collect();
        let s = DailySeries::from_values(simulation_start(), v).unwrap();
        let r = rolling_backtest(&s, &BacktestConfig::new(60, 10, 14)).unwrap();
        assert!(r.aggregates.mape < 0.1);
        assert!(r.failed_origins.is_empty());
    }

    #[test]
    fn random_walk_backtest_coverage() {
        let s = spec(ArimaOrder::new(0, 1, 0, false), vec![], vec![], 0.0, 1.0, 600, 77);
        let series = simulate_arima(&s).unwrap();
        let r = rolling_backtest(&series, &BacktestConfig::new(100, 10, 10)).unwrap();
        let origins: std::collections::BTreeSet<usize> = r.records.iter().map(|x| x.origin_index).collect();
        assert_eq!(origins.len(), 50);
        assert!((0.85..=1.0).contains(&r.aggregates.coverage), "{:?}", r.aggregates);
    }

    #[test]
    fn short_backtest_rejected() {
        let s = DailySeries::from_values(simulation_start(), vec![1.0; 40]).unwrap();
        assert!(matches!(
            rolling_backtest(&s, &BacktestConfig::new(35, 1, 10)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn held_out_values_are_never_read() {
        let s = spec(ArimaOrder::new(1, 1, 0, true), vec![0.4], vec![], 0.5, 1.0, 200, 4);
        let clean = simulate_arima(&s).unwrap();
        let origin = 120;
        let mut poisoned = clean.values().to_vec();
        for v in &mut poisoned[origin..] {
            *v = f64::NAN;
        }
        let poisoned = DailySeries::from_values(clean.start_date(), poisoned).unwrap();
        let opts = SelectOptions::default();
        let a = forecast_from_prefix(&clean, origin, 20, 0.95, &opts).unwrap();
        let b = forecast_from_prefix(&poisoned, origin, 20, 0.95, &opts).unwrap();
        assert_eq!(a, b);
    }
}
