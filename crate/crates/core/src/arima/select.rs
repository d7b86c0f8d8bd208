//! Stepwise AICc order search.
//!
//! `d` comes from repeated KPSS tests. The search fits a fixed set of
//! starting models, then repeatedly evaluates the ±1 neighbors of the
//! incumbent (in p, q, both, and the constant toggle) and moves to the best
//! one while AICc improves.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{degenerate_fit, estimate_mle};
use super::kpss::select_d_values;
use super::{ArimaOrder, FittedModel, DEFAULT_P_MAX, DEFAULT_Q_MAX, MAX_D};
use crate::error::{Error, Result};
use crate::series::{difference, DailySeries};

pub const MIN_SELECT_LENGTH: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    pub p_max: usize,
    pub q_max: usize,
    pub d_max: usize,
    /// KPSS significance level.
    pub alpha: f64,
    /// Skip the KPSS step and use this `d`.
    pub d_override: Option<usize>,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            p_max: DEFAULT_P_MAX,
            q_max: DEFAULT_Q_MAX,
            d_max: MAX_D,
            alpha: 0.05,
            d_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub order: ArimaOrder,
    /// `None` when the fit failed.
    pub aicc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub model: FittedModel,
    pub starting_orders: Vec<ArimaOrder>,
    /// Every candidate in the order it was evaluated.
    pub candidates: Vec<CandidateScore>,
}

/// Stepwise selection with default options apart from the order caps.
pub fn select_order(series: &DailySeries, p_max: usize, q_max: usize) -> Result<FittedModel> {
    let opts = SelectOptions {
        p_max,
        q_max,
        ..Default::default()
    };
    Ok(select_order_with(series, &opts)?.model)
}

/// Ordering used for the search: AICc, then (p, q, with_constant).
fn rank(a: &FittedModel, b: &FittedModel) -> Ordering {
    a.aicc
        .total_cmp(&b.aicc)
        .then_with(|| (a.order.p, a.order.q, a.order.with_constant).cmp(&(b.order.p, b.order.q, b.order.with_constant)))
}

fn is_constant(x: &[f64]) -> bool {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let scale = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
    hi - lo <= 1e-12 * scale
}

pub fn starting_orders(d: usize, p_max: usize, q_max: usize) -> Vec<ArimaOrder> {
    let constants: &[bool] = if d <= 1 { &[true, false] } else { &[false] };
    let mut out = Vec::new();
    for (p, q) in [(2, 2), (1, 0), (0, 1), (0, 0)] {
        for &c in constants {
            let order = ArimaOrder::new(p.min(p_max), d, q.min(q_max), c);
            if !out.contains(&order) {
                out.push(order);
            }
        }
    }
    out
}

fn neighbors(o: &ArimaOrder, opts: &SelectOptions) -> Vec<ArimaOrder> {
    let mut out = Vec::new();
    let steps: [(i64, i64); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)];
    for (dp, dq) in steps {
        let (p, q) = (o.p as i64 + dp, o.q as i64 + dq);
        if p < 0 || q < 0 || p as usize > opts.p_max || q as usize > opts.q_max {
            continue;
        }
        out.push(ArimaOrder::new(p as usize, o.d, q as usize, o.with_constant));
    }
    if o.d <= 1 {
        out.push(ArimaOrder::new(o.p, o.d, o.q, !o.with_constant));
    }
    out
}

/// Runs the stepwise search. The returned model's AICc is never above the
/// best starting model's.
pub fn select_order_with(series: &DailySeries, opts: &SelectOptions) -> Result<Selection> {
    if series.len() < MIN_SELECT_LENGTH {
        return Err(Error::InsufficientData {
            needed: MIN_SELECT_LENGTH,
            got: series.len(),
        });
    }
    let d = match opts.d_override {
        Some(d) if d > MAX_D => return Err(Error::InvalidArgument(format!("d = {d} exceeds {MAX_D}"))),
        Some(d) => d,
        None => select_d_values(series.values(), opts.alpha, opts.d_max.min(MAX_D))?,
    };

    let diff = difference(series, d)?;
    if is_constant(&diff.values) && d <= 1 {
        let model = degenerate_fit(series, d, true)?;
        let order = model.order;
        return Ok(Selection {
            candidates: vec![CandidateScore {
                order,
                aicc: Some(model.aicc),
            }],
            starting_orders: vec![order],
            model,
        });
    }

    let mut fits: BTreeMap<ArimaOrder, Option<FittedModel>> = BTreeMap::new();
    let mut candidates = Vec::new();
    let mut evaluate = |orders: Vec<ArimaOrder>, fits: &mut BTreeMap<ArimaOrder, Option<FittedModel>>| {
        let fresh: Vec<ArimaOrder> = orders.into_iter().filter(|o| !fits.contains_key(o)).collect();
        let results: Vec<Option<FittedModel>> = fresh.par_iter().map(|o| estimate_mle(series, o).ok()).collect();
        for (o, r) in fresh.into_iter().zip(results) {
            candidates.push(CandidateScore {
                order: o,
                aicc: r.as_ref().map(|m| m.aicc),
            });
            fits.insert(o, r);
        }
    };

    let starting = starting_orders(d, opts.p_max, opts.q_max);
    evaluate(starting.clone(), &mut fits);
    let best_of = |orders: &[ArimaOrder], fits: &BTreeMap<ArimaOrder, Option<FittedModel>>| {
        orders
            .iter()
            .filter_map(|o| fits.get(o).and_then(|m| m.as_ref()))
            .min_by(|a, b| rank(a, b))
            .cloned()
    };
    let mut incumbent = best_of(&starting, &fits).ok_or(Error::NoModelFound)?;

    loop {
        let around = neighbors(&incumbent.order, opts);
        evaluate(around.clone(), &mut fits);
        match best_of(&around, &fits) {
            Some(cand) if rank(&cand, &incumbent) == Ordering::Less && cand.aicc < incumbent.aicc => {
                incumbent = cand;
            }
            _ => break,
        }
    }

    Ok(Selection {
        model: incumbent,
        starting_orders: starting,
        candidates,
    })
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

    #[test]
    fn starting_set() {
        assert_eq!(starting_orders(1, 5, 5).len(), 8);
        assert_eq!(starting_orders(2, 5, 5).len(), 4);
        assert!(starting_orders(2, 5, 5).iter().all(|o| !o.with_constant));
        assert_eq!(starting_orders(0, 0, 0).len(), 2);
    }

    #[test]
    fn white_noise_selects_zero_order() {
        let s = series(noise(500, 42));
        let sel = select_order_with(&s, &SelectOptions::default()).unwrap();
        let o = sel.model.order;
        assert_eq!((o.p, o.d, o.q), (0, 0, 0));

        // Oracle: brute-force AICc over the (p, q) ≤ (2, 2) grid.
        let mut best: Option<(f64, ArimaOrder)> = None;
        for p in 0..=2 {
            for q in 0..=2 {
                for c in [true, false] {
                    let order = ArimaOrder::new(p, 0, q, c);
                    if let Ok(m) = estimate_mle(&s, &order) {
                        if best.is_none_or(|(a, _)| m.aicc < a) {
                            best = Some((m.aicc, order));
                        }
                    }
                }
            }
        }
        let (_, grid) = best.unwrap();
        assert_eq!((grid.p, grid.q), (0, 0));
    }

    #[test]
    fn constant_series_is_degenerate() {
        let sel = select_order_with(&series(vec![5.0; 40]), &SelectOptions::default()).unwrap();
        let m = sel.model;
        assert!(m.degenerate);
        assert_eq!((m.order.p, m.order.d, m.order.q), (0, 0, 0));
        assert!(m.coefficients.sigma2.abs() < 1e-12);
        assert!((m.coefficients.constant - 5.0).abs() < 1e-12);
        assert!(m.aicc.is_finite());
    }

    #[test]
    fn linear_series_is_exact_drift() {
        let v: Vec<f64> = (0..50).map(|i| 10.0 + 3.0 * i as f64).collect();
        let m = select_order(&series(v), 5, 5).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.order.d, 1);
        assert!((m.coefficients.constant - 3.0).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            select_order(&series(noise(20, 1)), 5, 5),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn never_worse_than_start_models() {
        let v: Vec<f64> = noise(300, 9)
            .iter()
            .scan((0.0, 0.0), |(y, prev), e| {
                let dx = 0.5 * *prev + e;
                *prev = dx;
                *y += dx;
                Some(*y)
            })
            .collect();
        let sel = select_order_with(&series(v), &SelectOptions::default()).unwrap();
        let start_best = sel
            .candidates
            .iter()
            .filter(|c| sel.starting_orders.contains(&c.order))
            .filter_map(|c| c.aicc)
            .fold(f64::INFINITY, f64::min);
        assert!(sel.model.aicc <= start_best);
    }
}
