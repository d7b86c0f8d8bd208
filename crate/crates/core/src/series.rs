//! Calendar-indexed daily series.
//!
//! A [`DailySeries`] holds one value per consecutive calendar day starting at
//! `start_date`. Values are `f64` even for counts so that differenced and
//! forecast values share a type with observations.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Increments,
    Cumulative,
}

impl SeriesKind {
    pub fn other(self) -> Self {
        match self {
            SeriesKind::Increments => SeriesKind::Cumulative,
            SeriesKind::Cumulative => SeriesKind::Increments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    start_date: NaiveDate,
    values: Vec<f64>,
    kind: SeriesKind,
}

/// Shifts `date` by a signed number of days.
pub fn add_days(date: NaiveDate, days: i64) -> NaiveDate {
    if days >= 0 {
        date.checked_add_days(Days::new(days as u64))
    } else {
        date.checked_sub_days(Days::new(days.unsigned_abs()))
    }
    .expect("date out of range")
}

impl DailySeries {
    /// Builds a series, checking the kind invariants.
    pub fn new(start_date: NaiveDate, values: Vec<f64>, kind: SeriesKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if kind == SeriesKind::Cumulative {
            if values[0] < 0.0 {
                return Err(Error::NonMonotonicCumulative { index: 0 });
            }
            if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
                return Err(Error::NonMonotonicCumulative { index: i + 1 });
            }
        }
        Ok(Self {
            start_date,
            values,
            kind,
        })
    }

    /// Builds a series of arbitrary reals (simulated or transformed data).
    ///
    /// Only non-emptiness is checked; the kind is always `Increments`.
    pub fn from_values(start_date: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            start_date,
            values,
            kind: SeriesKind::Increments,
        })
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        add_days(self.start_date, index as i64)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty by construction")
    }

    /// First `len` days of the series.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.values.len() {
            return Err(Error::InvalidArgument(format!(
                "prefix length {len} outside 1..={}",
                self.values.len()
            )));
        }
        Ok(Self {
            start_date: self.start_date,
            values: self.values[..len].to_vec(),
            kind: self.kind,
        })
    }

    /// Keeps only days in `[first, last]`.
    pub fn truncate_to(&self, first: NaiveDate, last: NaiveDate) -> Result<Self> {
        let lo = (first - self.start_date).num_days().max(0) as usize;
        let hi = ((last - self.start_date).num_days() + 1).clamp(0, self.len() as i64) as usize;
        if lo >= hi {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            start_date: self.date_at(lo),
            values: self.values[lo..hi].to_vec(),
            kind: self.kind,
        })
    }

    /// Applies `f` to every value, keeping dates. The result is `Increments`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            start_date: self.start_date,
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: SeriesKind::Increments,
        }
    }
}

/// Daily counts built from event dates, plus the number of events dropped
/// because they fell outside the requested range.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTally {
    pub series: DailySeries,
    pub dropped: usize,
}

/// Counts events per day.
///
/// Without `range`, the series spans the first to the last event day. With a
/// range, it spans exactly `[first, last]` and events outside are dropped.
pub fn from_events(dates: &[NaiveDate], range: Option<(NaiveDate, NaiveDate)>) -> Result<EventTally> {
    if dates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    let mut dropped = 0;
    for &d in dates {
        match range {
            Some((lo, hi)) if d < lo || d > hi => dropped += 1,
            _ => *counts.entry(d).or_default() += 1,
        }
    }
    let (first, last) = match range {
        Some((lo, hi)) => {
            if lo > hi {
                return Err(Error::InvalidArgument(format!("range {lo}..{hi} is reversed")));
            }
            (lo, hi)
        }
        None => (
            *counts.keys().next().expect("non-empty"),
            *counts.keys().next_back().expect("non-empty"),
        ),
    };
    let len = (last - first).num_days() as usize + 1;
    let mut values = vec![0.0; len];
    for (d, c) in counts {
        values[(d - first).num_days() as usize] = c as f64;
    }
    Ok(EventTally {
        series: DailySeries::new(first, values, SeriesKind::Increments)?,
        dropped,
    })
}

/// Converts between daily increments and cumulative totals.
pub fn convert(series: &DailySeries, to: SeriesKind) -> Result<DailySeries> {
    if series.kind == to {
        return Ok(series.clone());
    }
    let values = match to {
        SeriesKind::Cumulative => {
            let mut acc = 0.0;
            series
                .values
                .iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect()
        }
        SeriesKind::Increments => {
            let v = &series.values;
            std::iter::once(v[0]).chain(v.windows(2).map(|w| w[1] - w[0])).collect()
        }
    };
    DailySeries::new(series.start_date, values, to)
}

/// A series differenced `d` times, carrying what is needed to invert it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferencedSeries {
    pub values: Vec<f64>,
    pub d: usize,
    /// `seed_values[k]` is the first element of the k-times differenced series.
    pub seed_values: Vec<f64>,
    /// `tail_values[k]` is the last element of the k-times differenced series.
    pub tail_values: Vec<f64>,
    pub origin_start_date: NaiveDate,
}

/// First differences of `values`.
pub fn diff_once(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Applies the first-difference operator `d` times.
pub fn difference(series: &DailySeries, d: usize) -> Result<DifferencedSeries> {
    difference_values(series.values(), d, series.start_date())
}

pub(crate) fn difference_values(values: &[f64], d: usize, origin: NaiveDate) -> Result<DifferencedSeries> {
    if values.len() <= d {
        return Err(Error::InsufficientData {
            needed: d + 1,
            got: values.len(),
        });
    }
    let mut current = values.to_vec();
    let mut seed_values = Vec::with_capacity(d);
    let mut tail_values = Vec::with_capacity(d);
    for _ in 0..d {
        seed_values.push(current[0]);
        tail_values.push(*current.last().expect("len > d"));
        current = diff_once(&current);
    }
    Ok(DifferencedSeries {
        values: current,
        d,
        seed_values,
        tail_values,
        origin_start_date: origin,
    })
}

impl DifferencedSeries {
    /// Rebuilds the original series from the seeds.
    pub fn undifference(&self) -> Vec<f64> {
        let mut current = self.values.clone();
        for k in (0..self.d).rev() {
            let mut acc = self.seed_values[k];
            let mut rebuilt = Vec::with_capacity(current.len() + 1);
            rebuilt.push(acc);
            for v in &current {
                acc += v;
                rebuilt.push(acc);
            }
            current = rebuilt;
        }
        current
    }
}

/// Maps a continuation of the differenced series back to the original scale.
///
/// The returned values continue directly from the last original observation.
pub fn integrate(diff: &DifferencedSeries, future: &[f64]) -> Vec<f64> {
    extend_from_tails(&diff.tail_values, future)
}

/// Undifferences `future` given the last value at each differencing level
/// (`tails[k]` = last value of the k-times differenced series).
pub fn extend_from_tails(tails: &[f64], future: &[f64]) -> Vec<f64> {
    let mut current = future.to_vec();
    for &tail in tails.iter().rev() {
        let mut acc = tail;
        for v in current.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    current
}
