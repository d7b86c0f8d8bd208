//! Command-line interface.
//!
//! Each subcommand produces one kind of artifact; `pipeline` runs them all
//! for a set of series. Exit status is 0 on success, 2 when some series were
//! skipped, 1 on a fatal error. Errors go to standard error as a single JSON
//! line `{"error": code, "detail": message}`.

pub mod config;
pub mod output;
pub mod pipeline;

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::arima::{ArimaCoefficients, ArimaOrder, Forecast, SelectOptions, DEFAULT_P_MAX, DEFAULT_Q_MAX, MAX_D};
use crate::error::{Error, Result};
use crate::growth::{doubling_date, horizon_report, linear_fit, offsets_for_dates, DEFAULT_OFFSETS};
use crate::ingest::{standard_spec, write_records, Dataset};
use crate::series::{convert, DailySeries, SeriesKind};
use crate::simulate::{rolling_backtest, simulate_arima, BacktestConfig, SimulationSpec, DEFAULT_BURN_IN};
use config::{FitScale, PipelineArgs, DEFAULT_HORIZON_DAYS, DEFAULT_LEVEL};
use output::{forecast_csv, read_values_csv, series_csv, to_json, values_csv, write_atomic, write_json};
use pipeline::{daily_series, fit_series, load_records, run_pipeline, ModelFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "litgrowth", version, about = "Daily publication-count series, ARIMA forecasts and growth reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a record export and print the reject report.
    Ingest(IngestArgs),
    /// Emit the daily and cumulative counts of one series.
    Series(SeriesArgs),
    /// Select and fit an ARIMA model for one series.
    Fit(FitArgs),
    /// Forecast from a fitted model file.
    Forecast(ForecastArgs),
    /// Horizon table and doubling dates from a forecast file.
    Report(ReportArgs),
    /// Simulate an ARIMA series.
    Simulate(SimulateArgs),
    /// Rolling-origin backtest of the order selection and forecasts.
    Backtest(BacktestArgs),
    /// Run ingestion, fitting, forecasting and reporting end to end.
    Pipeline(PipelineArgs),
}

fn parse_dataset(s: &str) -> std::result::Result<Dataset, String> {
    Dataset::parse(s).ok_or_else(|| format!("unknown dataset `{s}` (expected dimensions or who)"))
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Reject rows from any other dataset.
    #[arg(long, value_parser = parse_dataset)]
    pub dataset: Option<Dataset>,
    /// Write the accepted records, normalized, to this CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Record export (CSV with id,date,source,open_access,dataset).
    #[arg(long)]
    pub input: PathBuf,
    /// Standard series name (TS1a…TS3d).
    #[arg(long)]
    pub series: String,
    #[arg(long)]
    pub start_date: Option<NaiveDate>,
    /// Last observed day; later records are dropped.
    #[arg(long)]
    pub end_date: Option<NaiveDate>,
}

impl SourceArgs {
    fn load(&self) -> Result<(String, DailySeries)> {
        let spec = standard_spec(&self.series)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown series `{}`", self.series)))?;
        let parsed = load_records(&self.input)?;
        let daily = daily_series(&parsed.records, &spec, self.start_date, self.end_date)?;
        Ok((spec.name, daily))
    }
}

#[derive(Debug, Args)]
pub struct OrderCaps {
    #[arg(long, default_value_t = DEFAULT_P_MAX)]
    pub p_max: usize,
    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    pub q_max: usize,
    #[arg(long, default_value_t = MAX_D)]
    pub d_max: usize,
}

impl OrderCaps {
    fn options(&self) -> SelectOptions {
        SelectOptions {
            p_max: self.p_max,
            q_max: self.q_max,
            d_max: self.d_max,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// CSV destination (`date,daily,cumulative`); standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = FitScale::Cumulative)]
    pub fit_scale: FitScale,
    #[command(flatten)]
    pub caps: OrderCaps,
    /// Model JSON destination; standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Model file written by `fit` or `pipeline`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HORIZON_DAYS)]
    pub horizon_days: usize,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    pub level: f64,
    /// Forecast CSV destination; standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the forecast as JSON (input for `report`).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Forecast JSON written by `forecast --json`.
    #[arg(long)]
    pub forecast: PathBuf,
    /// Series name used in the report and file names.
    #[arg(long)]
    pub name: String,
    /// Day offsets from the anchor.
    #[arg(long, value_delimiter = ',', conflicts_with = "dates")]
    pub offsets: Option<Vec<usize>>,
    /// Calendar dates instead of offsets.
    #[arg(long, value_delimiter = ',')]
    pub dates: Option<Vec<NaiveDate>>,
    #[arg(long, default_value_t = 2.0)]
    pub factor: f64,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    pub d: usize,
    /// Comma-separated AR coefficients.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub phi: Vec<f64>,
    /// Comma-separated MA coefficients.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    /// Intercept on the differenced scale; non-zero adds a constant term.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub constant: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// CSV destination (`date,value`); standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Record export; requires `--series`.
    #[arg(long, requires = "series", conflicts_with = "values")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub series: Option<String>,
    /// A `date,value` CSV (e.g. from `simulate`) used as is.
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long)]
    pub start_date: Option<NaiveDate>,
    #[arg(long)]
    pub end_date: Option<NaiveDate>,
    /// Scale of record-based series to backtest on.
    #[arg(long, value_enum, default_value_t = FitScale::Cumulative)]
    pub fit_scale: FitScale,
    #[arg(long)]
    pub initial_window: usize,
    #[arg(long, default_value_t = 7)]
    pub step: usize,
    #[arg(long, default_value_t = 30)]
    pub horizon_days: usize,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    pub level: f64,
    #[command(flatten)]
    pub caps: OrderCaps,
    /// Report JSON destination; standard output if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Human-readable progress lines on standard output.
struct Console {
    color: bool,
}

impl Console {
    fn new() -> Self {
        let no_color = std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty());
        Self {
            color: !no_color && std::io::stdout().is_terminal(),
        }
    }

    fn status(&self, ok: bool, name: &str, msg: &str) {
        let (tag, code) = if ok { ("ok", "32") } else { ("skipped", "33") };
        let tag = if self.color {
            format!("\x1b[{code}m{tag:>7}\x1b[0m")
        } else {
            format!("{tag:>7}")
        };
        println!("{tag} {name:<5} {msg}");
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
}

fn error_line(code: &str, detail: &str) -> String {
    let info = pipeline::ErrorInfo {
        error: code.to_string(),
        detail: detail.to_string(),
    };
    serde_json::to_string(&info).expect("strings always serialize")
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{}", e.render());
                return EXIT_OK;
            }
            let detail = e.render().to_string();
            eprintln!("{}", error_line("invalid_argument", detail.trim()));
            return EXIT_FATAL;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_line(e.code(), &e.to_string()));
            EXIT_FATAL
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Series(a) => series(a),
        Command::Fit(a) => fit(a),
        Command::Forecast(a) => forecast_cmd(a),
        Command::Report(a) => report(a),
        Command::Simulate(a) => simulate(a),
        Command::Backtest(a) => backtest(a),
        Command::Pipeline(a) => pipeline_cmd(a),
    }
}

fn ingest(a: IngestArgs) -> Result<i32> {
    let parsed = crate::ingest::parse_records(std::io::BufReader::new(std::fs::File::open(&a.input)?), a.dataset)?;
    if let Some(path) = &a.output {
        let mut buf = Vec::new();
        write_records(&parsed.records, &mut buf)?;
        write_atomic(path, &buf)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        reject_report: &'a crate::ingest::RejectReport,
        duplicate_ids: &'a std::collections::BTreeMap<String, usize>,
    }
    emit(
        None,
        &to_json(&Summary {
            reject_report: &parsed.report,
            duplicate_ids: &parsed.duplicate_ids,
        })?,
    )?;
    Ok(EXIT_OK)
}

fn series(a: SeriesArgs) -> Result<i32> {
    let (_, daily) = a.source.load()?;
    let cumulative = convert(&daily, SeriesKind::Cumulative)?;
    emit(a.output.as_deref(), &series_csv(&daily, &cumulative))?;
    if a.output.is_some() {
        #[derive(Serialize)]
        struct Summary {
            days: usize,
            total: f64,
            linear_fit: crate::growth::LinearFit,
        }
        emit(
            None,
            &to_json(&Summary {
                days: daily.len(),
                total: cumulative.last(),
                linear_fit: linear_fit(&cumulative)?,
            })?,
        )?;
    }
    Ok(EXIT_OK)
}

fn fit(a: FitArgs) -> Result<i32> {
    let (name, daily) = a.source.load()?;
    let model = fit_series(&name, &daily, a.fit_scale, &a.caps.options())?;
    emit(a.output.as_deref(), &to_json(&model)?)?;
    Ok(EXIT_OK)
}

fn forecast_cmd(a: ForecastArgs) -> Result<i32> {
    let model: ModelFile = read_json(&a.model)?;
    let f = model.forecast(a.horizon_days, a.level)?;
    if let Some(path) = &a.json {
        write_json(path, &f)?;
    }
    emit(a.output.as_deref(), &forecast_csv(&f))?;
    Ok(EXIT_OK)
}

fn report(a: ReportArgs) -> Result<i32> {
    let f: Forecast = read_json(&a.forecast)?;
    let offsets = match (&a.offsets, &a.dates) {
        (_, Some(dates)) => offsets_for_dates(&f, dates)?,
        (Some(o), None) => o.clone(),
        (None, None) => DEFAULT_OFFSETS.to_vec(),
    };
    let report = horizon_report(&a.name, &f, &offsets)?;
    let doubling = doubling_date(&f, f.anchor_value, a.factor)?;
    std::fs::create_dir_all(&a.output_dir)?;
    write_json(&a.output_dir.join(format!("{}.report.json", a.name)), &report)?;
    write_json(&a.output_dir.join(format!("{}.doubling.json", a.name)), &doubling)?;
    Ok(EXIT_OK)
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let order = ArimaOrder::new(a.phi.len(), a.d, a.theta.len(), a.constant != 0.0);
    let coefficients = ArimaCoefficients::new(a.phi, a.theta, a.constant, a.sigma2);
    let spec = SimulationSpec {
        burn_in: a.burn_in,
        ..SimulationSpec::new(order, coefficients, a.n, a.seed)
    };
    let series = simulate_arima(&spec)?;
    emit(a.output.as_deref(), &values_csv(&series))?;
    Ok(EXIT_OK)
}

fn backtest(a: BacktestArgs) -> Result<i32> {
    let series = match (&a.values, &a.input, &a.series) {
        (Some(path), _, _) => read_values_csv(path)?,
        (None, Some(input), Some(name)) => {
            let source = SourceArgs {
                input: input.clone(),
                series: name.clone(),
                start_date: a.start_date,
                end_date: a.end_date,
            };
            let (_, daily) = source.load()?;
            match a.fit_scale {
                FitScale::Cumulative => convert(&daily, SeriesKind::Cumulative)?,
                FitScale::Increments => daily,
            }
        }
        _ => return Err(Error::InvalidArgument("need --values or --input with --series".into())),
    };
    let config = BacktestConfig {
        level: a.level,
        select: a.caps.options(),
        ..BacktestConfig::new(a.initial_window, a.step, a.horizon_days)
    };
    let report = rolling_backtest(&series, &config)?;
    emit(a.output.as_deref(), &to_json(&report)?)?;
    Ok(if report.failed_origins.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn pipeline_cmd(a: PipelineArgs) -> Result<i32> {
    let config = a.resolve()?;
    let outcome = run_pipeline(&config)?;
    let console = Console::new();
    for (name, status) in &outcome.log.series {
        match status {
            pipeline::SeriesStatus::Ok { fit, total, .. } => {
                console.status(true, name, &format!("{} total {total} aicc {:.3}", fit.order, fit.aicc))
            }
            pipeline::SeriesStatus::Skipped(e) => console.status(false, name, &e.detail),
        }
    }
    if outcome.succeeded() == 0 {
        eprintln!(
            "{}",
            error_line("all_series_failed", &format!("no series could be processed; see {}", outcome.log_path.display()))
        );
        return Ok(EXIT_FATAL);
    }
    Ok(if outcome.skipped() > 0 { EXIT_PARTIAL } else { EXIT_OK })
}
