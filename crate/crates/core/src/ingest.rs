//! Publication-record exports and the eight standard daily series.
//!
//! Input is a header-bearing CSV with columns `id,date,source,open_access,dataset`.
//! Malformed rows are never dropped silently: each one is tallied under a
//! reason in the [`RejectReport`].

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{from_events, DailySeries};

pub const COLUMNS: [&str; 5] = ["id", "date", "source", "open_access", "dataset"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Dimensions,
    Who,
}

impl Dataset {
    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Dimensions => "dimensions",
            Dataset::Who => "who",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dimensions" => Some(Dataset::Dimensions),
            "who" => Some(Dataset::Who),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub date_indexed: NaiveDate,
    pub source: String,
    pub open_access: Option<bool>,
    pub dataset: Dataset,
}

/// Known provider labels, keyed by the label with case, spaces, hyphens and
/// underscores removed.
const SOURCE_ALIASES: &[(&str, &str)] = &[
    ("pubmed", "pubmed"),
    ("medline", "pubmed"),
    ("pmc", "pmc"),
    ("pubmedcentral", "pmc"),
    ("medrxiv", "medrxiv"),
    ("biorxiv", "biorxiv"),
    ("ssrn", "ssrn"),
    ("ssrnelectronicjournal", "ssrn"),
    ("elsevier", "elsevier"),
    ("whocovid19", "who"),
    ("who", "who"),
];

/// Normalizes a provider label to a lowercase source token.
pub fn normalize_source(raw: &str) -> String {
    let squashed: String = raw
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect();
    SOURCE_ALIASES
        .iter()
        .find(|(alias, _)| *alias == squashed)
        .map(|(_, token)| token.to_string())
        .unwrap_or_else(|| raw.trim().to_lowercase())
}

/// Per-reason tally of rejected rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectReport {
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
}

impl RejectReport {
    pub fn total_rejected(&self) -> usize {
        self.rejected.values().sum()
    }

    fn reject(&mut self, reason: &str) {
        *self.rejected.entry(reason.to_string()).or_default() += 1;
    }
}

#[derive(Debug, Clone)]
pub struct ParsedRecords {
    pub records: Vec<PublicationRecord>,
    pub report: RejectReport,
    /// Ids seen more than once within one dataset, with their multiplicity.
    pub duplicate_ids: BTreeMap<String, usize>,
}

fn parse_bool(raw: &str) -> std::result::Result<Option<bool>, ()> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "true" | "1" | "yes" => Ok(Some(true)),
        "false" | "0" | "no" => Ok(Some(false)),
        _ => Err(()),
    }
}

/// Parses a record export. With `expected = Some(ds)`, rows from another
/// dataset are rejected as `dataset_mismatch`.
pub fn parse_records<R: Read>(input: R, expected: Option<Dataset>) -> Result<ParsedRecords> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::Fields)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    let mut index = HashMap::new();
    for column in COLUMNS {
        let pos = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(column))
            .ok_or_else(|| Error::SchemaError {
                column: column.to_string(),
            })?;
        index.insert(column, pos);
    }

    let mut records = Vec::new();
    let mut report = RejectReport::default();
    let mut rows = 0usize;
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                rows += 1;
                report.reject("malformed_row");
                continue;
            }
        };
        rows += 1;
        if row.len() != headers.len() {
            report.reject("malformed_row");
            continue;
        }
        let field = |c: &str| &row[index[c]];
        let id = field("id");
        if id.is_empty() {
            report.reject("missing_id");
            continue;
        }
        let Ok(date_indexed) = NaiveDate::parse_from_str(field("date"), "%Y-%m-%d") else {
            report.reject("bad_date");
            continue;
        };
        let Ok(open_access) = parse_bool(field("open_access")) else {
            report.reject("bad_open_access");
            continue;
        };
        let Some(dataset) = Dataset::parse(field("dataset")) else {
            report.reject("bad_dataset");
            continue;
        };
        if expected.is_some_and(|e| e != dataset) {
            report.reject("dataset_mismatch");
            continue;
        }
        records.push(PublicationRecord {
            id: id.to_string(),
            date_indexed,
            source: normalize_source(field("source")),
            open_access,
            dataset,
        });
    }
    if rows == 0 {
        return Err(Error::EmptyInput);
    }
    report.accepted = records.len();

    let mut seen: HashMap<(Dataset, &str), usize> = HashMap::new();
    for r in &records {
        *seen.entry((r.dataset, r.id.as_str())).or_default() += 1;
    }
    let duplicate_ids = seen
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|((ds, id), n)| (format!("{}:{id}", ds.as_str()), n))
        .collect();

    Ok(ParsedRecords {
        records,
        report,
        duplicate_ids,
    })
}

/// Writes records in the input CSV format.
pub fn write_records<W: Write>(records: &[PublicationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        let oa = match r.open_access {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        let date = r.date_indexed.format("%Y-%m-%d").to_string();
        w.write_record([r.id.as_str(), &date, &r.source, oa, r.dataset.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub name: String,
    pub dataset: Dataset,
    pub source_filter: Option<String>,
    pub oa_filter: Option<bool>,
}

impl SeriesSpec {
    fn new(name: &str, dataset: Dataset, source: Option<&str>, oa: Option<bool>) -> Self {
        Self {
            name: name.to_string(),
            dataset,
            source_filter: source.map(str::to_string),
            oa_filter: oa,
        }
    }

    pub fn matches(&self, r: &PublicationRecord) -> bool {
        r.dataset == self.dataset
            && self.source_filter.as_deref().is_none_or(|s| r.source == s)
            && self.oa_filter.is_none_or(|oa| r.open_access == Some(oa))
    }
}

/// The eight standard series: totals per database, the OA split and four
/// sources, all but TS1a drawn from Dimensions.
pub fn standard_specs() -> Vec<SeriesSpec> {
    use Dataset::*;
    vec![
        SeriesSpec::new("TS1a", Who, None, None),
        SeriesSpec::new("TS1b", Dimensions, None, None),
        SeriesSpec::new("TS2a", Dimensions, None, Some(true)),
        SeriesSpec::new("TS2b", Dimensions, None, Some(false)),
        SeriesSpec::new("TS3a", Dimensions, Some("pubmed"), None),
        SeriesSpec::new("TS3b", Dimensions, Some("pmc"), None),
        SeriesSpec::new("TS3c", Dimensions, Some("medrxiv"), None),
        SeriesSpec::new("TS3d", Dimensions, Some("ssrn"), None),
    ]
}

/// Looks up a standard spec by name, case-insensitively.
pub fn standard_spec(name: &str) -> Option<SeriesSpec> {
    standard_specs().into_iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

/// Filters records by `spec` and counts them per indexing day.
pub fn build_series(
    records: &[PublicationRecord],
    spec: &SeriesSpec,
    range: Option<(NaiveDate, NaiveDate)>,
) -> Result<DailySeries> {
    let dates: Vec<NaiveDate> = records
        .iter()
        .filter(|r| spec.matches(r))
        .map(|r| r.date_indexed)
        .collect();
    if dates.is_empty() {
        return Err(Error::EmptySelection {
            spec: spec.name.clone(),
        });
    }
    match from_events(&dates, range) {
        Ok(t) => Ok(t.series),
        Err(Error::EmptyInput) => Err(Error::EmptySelection {
            spec: spec.name.clone(),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Default)]
pub struct StandardSuite {
    pub series: BTreeMap<String, DailySeries>,
    /// Spec name to the reason it could not be built.
    pub skipped: BTreeMap<String, String>,
}

pub fn build_standard_suite(records: &[PublicationRecord]) -> StandardSuite {
    let mut suite = StandardSuite::default();
    for spec in standard_specs() {
        match build_series(records, &spec, None) {
            Ok(s) => {
                suite.series.insert(spec.name, s);
            }
            Err(e) => {
                suite.skipped.insert(spec.name, e.to_string());
            }
        }
    }
    suite
}
