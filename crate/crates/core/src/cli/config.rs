//! Pipeline configuration: a flat TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::arima::{DEFAULT_P_MAX, DEFAULT_Q_MAX, MAX_D};
use crate::error::{Error, Result};
use crate::growth::DEFAULT_OFFSETS;

/// Which scale the ARIMA model is fitted on. Forecasts are always reported
/// as running totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitScale {
    Cumulative,
    Increments,
}

pub const DEFAULT_HORIZON_DAYS: usize = 365;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_SEED: u64 = 42;
/// Series selector that expands to the eight standard series.
pub const ALL_SERIES: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub series: Vec<String>,
    pub horizon_days: usize,
    pub level: f64,
    pub offsets: Vec<usize>,
    pub fit_scale: FitScale,
    pub p_max: usize,
    pub q_max: usize,
    pub d_max: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// First day of every series; earlier records are dropped.
    pub start_date: Option<NaiveDate>,
    /// Last observed day (the forecast anchor); later records are dropped.
    pub end_date: Option<NaiveDate>,
}

/// Contents of a config file. Keys mirror [`PipelineConfig`] field names.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input_path: Option<PathBuf>,
    pub series: Option<Vec<String>>,
    pub horizon_days: Option<usize>,
    pub level: Option<f64>,
    pub offsets: Option<Vec<usize>>,
    pub fit_scale: Option<FitScale>,
    pub p_max: Option<usize>,
    pub q_max: Option<usize>,
    pub d_max: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config file: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Flat TOML file with any of the keys below (snake_case); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record export (CSV with id,date,source,open_access,dataset).
    #[arg(long, visible_alias = "input")]
    pub input_path: Option<PathBuf>,
    /// Comma-separated series names (TS1a…TS3d) or `all`.
    #[arg(long, value_delimiter = ',')]
    pub series: Option<Vec<String>>,
    #[arg(long)]
    pub horizon_days: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Comma-separated day offsets for the horizon table.
    #[arg(long, value_delimiter = ',')]
    pub offsets: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub fit_scale: Option<FitScale>,
    #[arg(long)]
    pub p_max: Option<usize>,
    #[arg(long)]
    pub q_max: Option<usize>,
    #[arg(long)]
    pub d_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub start_date: Option<NaiveDate>,
    #[arg(long)]
    pub end_date: Option<NaiveDate>,
}

impl PipelineArgs {
    /// Merges flags over the config file (if any) over defaults, then validates.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let input_path = self
            .input_path
            .clone()
            .or(file.input_path)
            .ok_or_else(|| Error::InvalidArgument("input_path is required".into()))?;
        let config = PipelineConfig {
            input_path,
            series: self
                .series
                .clone()
                .or(file.series)
                .unwrap_or_else(|| vec![ALL_SERIES.to_string()]),
            horizon_days: self.horizon_days.or(file.horizon_days).unwrap_or(DEFAULT_HORIZON_DAYS),
            level: self.level.or(file.level).unwrap_or(DEFAULT_LEVEL),
            offsets: self
                .offsets
                .clone()
                .or(file.offsets)
                .unwrap_or_else(|| DEFAULT_OFFSETS.to_vec()),
            fit_scale: self.fit_scale.or(file.fit_scale).unwrap_or(FitScale::Cumulative),
            p_max: self.p_max.or(file.p_max).unwrap_or(DEFAULT_P_MAX),
            q_max: self.q_max.or(file.q_max).unwrap_or(DEFAULT_Q_MAX),
            d_max: self.d_max.or(file.d_max).unwrap_or(MAX_D),
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            output_dir: self
                .output_dir
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            start_date: self.start_date.or(file.start_date),
            end_date: self.end_date.or(file.end_date),
        };
        config.validate()?;
        Ok(config)
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.5 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level {} outside (0.5, 1)", self.level)));
        }
        if self.offsets.is_empty() || self.offsets.contains(&0) {
            return Err(Error::InvalidArgument("offsets must be positive day counts".into()));
        }
        let max_offset = self.offsets.iter().copied().max().unwrap_or(0);
        if self.horizon_days < max_offset {
            return Err(Error::InvalidHorizon(format!(
                "horizon {} is shorter than offset {max_offset}",
                self.horizon_days
            )));
        }
        if self.d_max > MAX_D {
            return Err(Error::InvalidArgument(format!("d_max {} exceeds {MAX_D}", self.d_max)));
        }
        if self.series.is_empty() {
            return Err(Error::InvalidArgument("no series selected".into()));
        }
        if let (Some(a), Some(b)) = (self.start_date, self.end_date) {
            if a > b {
                return Err(Error::InvalidArgument(format!("start_date {a} is after end_date {b}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> PipelineArgs {
        PipelineArgs {
            input_path: Some("records.csv".into()),
            ..Default::default()
        }
    }

    #[test]
    fn defaults() {
        let c = args().resolve().unwrap();
        assert_eq!(c.horizon_days, 365);
        assert_eq!(c.level, 0.95);
        assert_eq!(c.offsets, vec![90, 180, 270, 365]);
        assert_eq!(c.fit_scale, FitScale::Cumulative);
        assert_eq!(c.series, vec!["all"]);
        assert_eq!((c.p_max, c.q_max, c.d_max), (5, 5, 2));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "input_path = \"a.csv\"\nhorizon_days = 400\nlevel = 0.9\nseries = [\"ts1a\"]\nend_date = \"2020-10-14\"\n",
        )
        .unwrap();
        let a = PipelineArgs {
            config: Some(path),
            level: Some(0.8),
            ..Default::default()
        };
        let c = a.resolve().unwrap();
        assert_eq!(c.input_path, PathBuf::from("a.csv"));
        assert_eq!(c.horizon_days, 400);
        assert_eq!(c.level, 0.8);
        assert_eq!(c.series, vec!["ts1a"]);
        assert_eq!(c.end_date, NaiveDate::from_ymd_opt(2020, 10, 14));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(FileConfig::parse("horizon = 3").is_err());
    }

    #[test]
    fn invariants_checked() {
        let short = PipelineArgs {
            horizon_days: Some(100),
            ..args()
        };
        assert!(matches!(short.resolve(), Err(Error::InvalidHorizon(_))));
        let low = PipelineArgs {
            level: Some(0.5),
            ..args()
        };
        assert!(low.resolve().is_err());
        assert!(PipelineArgs::default().resolve().is_err());
    }
}
