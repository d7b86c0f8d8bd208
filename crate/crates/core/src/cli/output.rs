//! Artifact formatting and atomic file writes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::arima::Forecast;
use crate::error::{Error, Result};
use crate::series::DailySeries;

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline. Struct fields keep declaration order
/// and maps are `BTreeMap`s, so output is stable across runs.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

/// `date,point,lower,upper,point_clamped,lower_clamped` with six decimals.
pub fn forecast_csv(f: &Forecast) -> String {
    let point_clamped = f.point_clamped();
    let lower_clamped = f.lower_clamped();
    let mut out = String::from("date,point,lower,upper,point_clamped,lower_clamped\n");
    for i in 0..f.horizon() {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            f.date(i),
            f.point[i],
            f.lower[i],
            f.upper[i],
            point_clamped[i],
            lower_clamped[i]
        )
        .expect("writing to a String");
    }
    out
}

/// `date,daily,cumulative` for a series of daily counts.
pub fn series_csv(daily: &DailySeries, cumulative: &DailySeries) -> String {
    let mut out = String::from("date,daily,cumulative\n");
    for (i, (d, c)) in daily.values().iter().zip(cumulative.values()).enumerate() {
        writeln!(out, "{},{d},{c}", daily.date_at(i)).expect("writing to a String");
    }
    out
}

/// `date,value` with full precision, for simulated or arbitrary series.
pub fn values_csv(series: &DailySeries) -> String {
    let mut out = String::from("date,value\n");
    for (i, v) in series.values().iter().enumerate() {
        writeln!(out, "{},{v}", series.date_at(i)).expect("writing to a String");
    }
    out
}

/// Reads a `date,value` CSV of consecutive days.
pub fn read_values_csv(path: &Path) -> Result<DailySeries> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::SchemaError {
            column: name.to_string(),
        })
    };
    let (date_col, value_col) = (col("date")?, col("value")?);
    let mut start = None;
    let mut values = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::InvalidArgument(format!("row {}: bad {what}", i + 1));
        let date: chrono::NaiveDate = row.get(date_col).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("date"))?;
        let value: f64 = row.get(value_col).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("value"))?;
        let first = *start.get_or_insert(date);
        if (date - first).num_days() != i as i64 {
            return Err(Error::InvalidArgument(format!("row {}: dates must be consecutive days", i + 1)));
        }
        values.push(value);
    }
    DailySeries::from_values(start.ok_or(Error::EmptyInput)?, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesKind;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn forecast_rows() {
        let f = Forecast {
            anchor_date: "2020-10-14".parse().unwrap(),
            anchor_value: 10.0,
            level: 0.95,
            point: vec![11.0, 12.5],
            lower: vec![9.0, 8.25],
            upper: vec![13.0, 16.75],
            scale: crate::arima::ForecastScale::Original,
            kind: SeriesKind::Cumulative,
        };
        let csv = forecast_csv(&f);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "2020-10-15,11.000000,9.000000,13.000000,11.000000,10.000000");
        assert_eq!(lines[2], "2020-10-16,12.500000,8.250000,16.750000,12.500000,10.000000");
    }

    #[test]
    fn values_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        let s = DailySeries::from_values("2020-01-01".parse().unwrap(), vec![0.1, -2.5, 1e-7]).unwrap();
        write_atomic(&p, values_csv(&s).as_bytes()).unwrap();
        assert_eq!(read_values_csv(&p).unwrap(), s);
    }
}
