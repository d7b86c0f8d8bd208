//! KPSS level-stationarity test and the differencing order it selects.

use crate::error::{Error, Result};
use crate::series::{diff_once, DailySeries};

/// Critical values of the KPSS level test (Kwiatkowski et al. table).
const CRITICAL: [(f64, f64); 4] = [(0.01, 0.739), (0.025, 0.574), (0.05, 0.463), (0.10, 0.347)];

pub const MIN_KPSS_LENGTH: usize = 20;

pub fn kpss_critical_value(alpha: f64) -> Result<f64> {
    CRITICAL
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|(_, c)| *c)
        .ok_or_else(|| Error::InvalidArgument(format!("no KPSS critical value tabulated for alpha = {alpha}")))
}

/// Bartlett-window truncation lag: ⌊4·(n/100)^¼⌋.
pub fn kpss_lag(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

fn is_constant(x: &[f64]) -> bool {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
    hi - lo <= 1e-12 * scale
}

/// KPSS statistic `n⁻² Σ S_t² / s²(ℓ)`; `None` for a constant series.
pub fn kpss_statistic(x: &[f64]) -> Option<f64> {
    if is_constant(x) {
        return None;
    }
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let e: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mut partial = 0.0;
    let mut sum_sq_partial = 0.0;
    for v in &e {
        partial += v;
        sum_sq_partial += partial * partial;
    }
    let lag = kpss_lag(n);
    let autocov = |s: usize| e[s..].iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let mut lrv = autocov(0);
    for s in 1..=lag.min(n - 1) {
        lrv += 2.0 * (1.0 - s as f64 / (lag as f64 + 1.0)) * autocov(s);
    }
    if !(lrv > 0.0) {
        return None;
    }
    Some(sum_sq_partial / (n as f64 * n as f64) / lrv)
}

/// Smallest `d ≤ d_max` for which KPSS does not reject level stationarity
/// at `alpha`; `d_max` if every test rejects. Constant series count as
/// stationary.
pub fn select_d(series: &DailySeries, alpha: f64, d_max: usize) -> Result<usize> {
    select_d_values(series.values(), alpha, d_max)
}

pub(crate) fn select_d_values(values: &[f64], alpha: f64, d_max: usize) -> Result<usize> {
    if values.len() < MIN_KPSS_LENGTH {
        return Err(Error::InsufficientData {
            needed: MIN_KPSS_LENGTH,
            got: values.len(),
        });
    }
    let critical = kpss_critical_value(alpha)?;
    let mut x = values.to_vec();
    for d in 0..=d_max {
        match kpss_statistic(&x) {
            None => return Ok(d),
            Some(stat) if stat < critical => return Ok(d),
            Some(_) => {}
        }
        if d < d_max {
            x = diff_once(&x);
        }
    }
    Ok(d_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn series(v: Vec<f64>) -> DailySeries {
        DailySeries::from_values(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), v).unwrap()
    }

    /// Direct O(n·ℓ) evaluation written from the definition.
    fn kpss_oracle(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let mut s2 = 0.0;
        for t in 0..x.len() {
            let st: f64 = x[..=t].iter().map(|v| v - m).sum();
            s2 += st * st;
        }
        let l = (4.0 * (n / 100.0).powf(0.25)).floor() as usize;
        let mut lrv = 0.0;
        for s in 0..=l {
            let mut g = 0.0;
            for t in s..x.len() {
                g += (x[t] - m) * (x[t - s] - m);
            }
            g /= n;
            let w = if s == 0 { 1.0 } else { 2.0 * (1.0 - s as f64 / (l as f64 + 1.0)) };
            lrv += w * g;
        }
        s2 / (n * n) / lrv
    }

    #[test]
    fn lag_rule() {
        assert_eq!(kpss_lag(100), 4);
        assert_eq!(kpss_lag(500), 5);
        assert_eq!(kpss_lag(800), 6);
    }

    #[test]
    fn statistic_matches_oracle() {
        let x = noise(137, 3);
        assert!((kpss_statistic(&x).unwrap() - kpss_oracle(&x)).abs() < 1e-10);
    }

    #[test]
    fn white_noise_is_level_stationary() {
        let x = noise(500, 42);
        assert!(kpss_oracle(&x) < 0.463);
        assert_eq!(select_d(&series(x), 0.05, 2).unwrap(), 0);
    }

    #[test]
    fn random_walk_needs_one_difference() {
        let walk: Vec<f64> = noise(500, 42)
            .iter()
            .scan(0.0, |a, e| {
                *a += e;
                Some(*a)
            })
            .collect();
        assert!(kpss_oracle(&walk) > 0.463);
        assert_eq!(select_d(&series(walk), 0.05, 2).unwrap(), 1);
    }

    #[test]
    fn constant_series_is_stationary() {
        assert_eq!(select_d(&series(vec![5.0; 40]), 0.05, 2).unwrap(), 0);
    }

    #[test]
    fn linear_trend_differences_to_constant() {
        let v: Vec<f64> = (0..60).map(|i| 3.0 + 2.5 * i as f64).collect();
        assert_eq!(select_d(&series(v), 0.05, 2).unwrap(), 1);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(select_d(&series(vec![1.0; 10]), 0.05, 2), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn unknown_alpha_rejected() {
        assert!(select_d(&series(noise(50, 1)), 0.07, 2).is_err());
    }
}
