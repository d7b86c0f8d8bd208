//! End-to-end run: records → daily series → model → forecast → reports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FitScale, PipelineConfig, ALL_SERIES};
use super::output::{forecast_csv, write_atomic, write_json};
use crate::arima::{
    forecast, forecast_accumulated, select_order_with, CandidateScore, FittedModel, Forecast, SelectOptions,
};
use crate::error::{Error, Result};
use crate::growth::{doubling_date, horizon_report, linear_fit, DoublingResult, HorizonReport, LinearFit};
use crate::ingest::{build_series, parse_records, standard_spec, standard_specs, ParsedRecords, PublicationRecord, RejectReport, SeriesSpec};
use crate::series::{convert, DailySeries, SeriesKind};

/// Everything needed to forecast again from a fitted series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub series: String,
    pub fit_scale: FitScale,
    /// Running total on the last observed day.
    pub cumulative_anchor: f64,
    pub model: FittedModel,
    pub candidates: Vec<CandidateScore>,
}

impl ModelFile {
    /// Forecast of the running total, whichever scale the model was fitted on.
    pub fn forecast(&self, h: usize, level: f64) -> Result<Forecast> {
        match self.fit_scale {
            FitScale::Cumulative => forecast(&self.model, h, level),
            FitScale::Increments => forecast_accumulated(&self.model, h, level, self.cumulative_anchor),
        }
    }
}

pub fn load_records(path: &Path) -> Result<ParsedRecords> {
    parse_records(BufReader::new(File::open(path)?), None)
}

/// Expands `all` and looks up standard series names.
pub fn resolve_specs(names: &[String]) -> Result<Vec<SeriesSpec>> {
    let mut out: Vec<SeriesSpec> = Vec::new();
    for name in names {
        let found = if name.eq_ignore_ascii_case(ALL_SERIES) {
            standard_specs()
        } else {
            vec![standard_spec(name).ok_or_else(|| Error::InvalidArgument(format!("unknown series `{name}`")))?]
        };
        for spec in found {
            if !out.contains(&spec) {
                out.push(spec);
            }
        }
    }
    Ok(out)
}

/// Daily counts for `spec`, optionally restricted to `[start, end]`.
pub fn daily_series(
    records: &[PublicationRecord],
    spec: &SeriesSpec,
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
) -> Result<DailySeries> {
    let full = build_series(records, spec, None)?;
    if start.is_none() && end.is_none() {
        return Ok(full);
    }
    let range = (start.unwrap_or(full.start_date()), end.unwrap_or(full.end_date()));
    if range.0 > range.1 {
        return Err(Error::EmptySelection { spec: spec.name.clone() });
    }
    build_series(records, spec, Some(range))
}

/// Selects and fits a model on the requested scale of `daily`.
pub fn fit_series(name: &str, daily: &DailySeries, scale: FitScale, opts: &SelectOptions) -> Result<ModelFile> {
    let cumulative = convert(daily, SeriesKind::Cumulative)?;
    let target = match scale {
        FitScale::Cumulative => &cumulative,
        FitScale::Increments => daily,
    };
    let selection = select_order_with(target, opts)?;
    Ok(ModelFile {
        series: name.to_string(),
        fit_scale: scale,
        cumulative_anchor: cumulative.last(),
        model: selection.model,
        candidates: selection.candidates,
    })
}

pub fn select_options(config: &PipelineConfig) -> SelectOptions {
    SelectOptions {
        p_max: config.p_max,
        q_max: config.q_max,
        d_max: config.d_max,
        ..Default::default()
    }
}

/// Per-series outputs of a successful run.
#[derive(Debug, Clone)]
pub struct SeriesArtifacts {
    pub daily: DailySeries,
    pub linear: LinearFit,
    pub model: ModelFile,
    pub forecast: Forecast,
    pub report: HorizonReport,
    pub doubling: DoublingResult,
}

pub fn process_series(records: &[PublicationRecord], spec: &SeriesSpec, config: &PipelineConfig) -> Result<SeriesArtifacts> {
    let daily = daily_series(records, spec, config.start_date, config.end_date)?;
    let linear = linear_fit(&convert(&daily, SeriesKind::Cumulative)?)?;
    let model = fit_series(&spec.name, &daily, config.fit_scale, &select_options(config))?;
    let forecast = model.forecast(config.horizon_days, config.level)?;
    let report = horizon_report(&spec.name, &forecast, &config.offsets)?;
    let doubling = doubling_date(&forecast, model.cumulative_anchor, 2.0)?;
    Ok(SeriesArtifacts {
        daily,
        linear,
        model,
        forecast,
        report,
        doubling,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub error: String,
    pub detail: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self {
            error: e.code().to_string(),
            detail: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub order: String,
    pub aicc: f64,
    pub loglik: f64,
    pub sigma2: f64,
    pub method: crate::arima::FitMethod,
    pub converged: bool,
    pub degenerate: bool,
    pub candidates_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SeriesStatus {
    Ok {
        start_date: NaiveDate,
        end_date: NaiveDate,
        days: usize,
        total: f64,
        linear_fit: LinearFit,
        fit: FitDiagnostics,
        outputs: Vec<String>,
    },
    Skipped(ErrorInfo),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuplicateSummary {
    /// Ids that appear more than once.
    pub ids: usize,
    /// Rows beyond the first for those ids.
    pub extra_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub version: String,
    pub config: PipelineConfig,
    pub reject_report: RejectReport,
    pub duplicates: DuplicateSummary,
    pub series: BTreeMap<String, SeriesStatus>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub log: RunLog,
    pub log_path: PathBuf,
}

impl PipelineOutcome {
    pub fn succeeded(&self) -> usize {
        self.log.series.values().filter(|s| matches!(s, SeriesStatus::Ok { .. })).count()
    }

    pub fn skipped(&self) -> usize {
        self.log.series.len() - self.succeeded()
    }
}

/// Runs every selected series and writes its artifacts plus `run.log.json`.
///
/// Fatal problems (unreadable input, schema errors, bad config) are returned
/// as errors; per-series failures are recorded in the log.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let specs = resolve_specs(&config.series)?;
    let parsed = load_records(&config.input_path)?;
    std::fs::create_dir_all(&config.output_dir)?;

    let results: Vec<(SeriesSpec, Result<SeriesArtifacts>)> = specs
        .into_par_iter()
        .map(|spec| {
            let r = process_series(&parsed.records, &spec, config);
            (spec, r)
        })
        .collect();

    let mut series = BTreeMap::new();
    for (spec, result) in results {
        let status = match result.and_then(|a| write_artifacts(&config.output_dir, &spec.name, &a).map(|files| (a, files))) {
            Ok((a, outputs)) => SeriesStatus::Ok {
                start_date: a.daily.start_date(),
                end_date: a.daily.end_date(),
                days: a.daily.len(),
                total: a.model.cumulative_anchor,
                linear_fit: a.linear,
                fit: FitDiagnostics {
                    order: a.model.model.order.to_string(),
                    aicc: a.model.model.aicc,
                    loglik: a.model.model.loglik,
                    sigma2: a.model.model.coefficients.sigma2,
                    method: a.model.model.method,
                    converged: a.model.model.converged,
                    degenerate: a.model.model.degenerate,
                    candidates_evaluated: a.model.candidates.len(),
                },
                outputs,
            },
            Err(e) => SeriesStatus::Skipped(ErrorInfo::from(&e)),
        };
        series.insert(spec.name, status);
    }

    let log = RunLog {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        reject_report: parsed.report,
        duplicates: DuplicateSummary {
            ids: parsed.duplicate_ids.len(),
            extra_rows: parsed.duplicate_ids.values().map(|n| n - 1).sum(),
        },
        series,
    };
    let log_path = config.output_dir.join("run.log.json");
    write_json(&log_path, &log)?;
    Ok(PipelineOutcome { log, log_path })
}

fn write_artifacts(dir: &Path, name: &str, a: &SeriesArtifacts) -> Result<Vec<String>> {
    let files = [
        format!("{name}.forecast.csv"),
        format!("{name}.report.json"),
        format!("{name}.model.json"),
        format!("{name}.doubling.json"),
    ];
    write_atomic(&dir.join(&files[0]), forecast_csv(&a.forecast).as_bytes())?;
    write_json(&dir.join(&files[1]), &a.report)?;
    write_json(&dir.join(&files[2]), &a.model)?;
    write_json(&dir.join(&files[3]), &a.doubling)?;
    Ok(files.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_resolution() {
        let all = resolve_specs(&["all".into(), "ts1b".into()]).unwrap();
        assert_eq!(all.len(), 8);
        let one = resolve_specs(&["ts3d".into()]).unwrap();
        assert_eq!(one[0].name, "TS3d");
        assert!(resolve_specs(&["ts9".into()]).is_err());
    }

    #[test]
    fn date_window_truncates() {
        let csv = "id,date,source,open_access,dataset\n\
            a,2020-03-01,pubmed,true,dimensions\n\
            b,2020-03-05,pubmed,true,dimensions\n\
            c,2020-03-09,pubmed,true,dimensions\n";
        let parsed = parse_records(csv.as_bytes(), None).unwrap();
        let spec = standard_spec("ts1b").unwrap();
        let s = daily_series(&parsed.records, &spec, None, Some("2020-03-06".parse().unwrap())).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.values().iter().sum::<f64>(), 2.0);
        let s = daily_series(&parsed.records, &spec, Some("2020-02-28".parse().unwrap()), None).unwrap();
        assert_eq!(s.start_date(), "2020-02-28".parse::<NaiveDate>().unwrap());
        assert_eq!(s.values().iter().sum::<f64>(), 3.0);
    }
}
