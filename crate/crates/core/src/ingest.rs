//! Contact-tracing visit records: CSV parsing, the trailing two-week filter,
//! and conversion to an offspring point pattern.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointPattern, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub patient: String,
    pub date: NaiveDate,
    pub address: String,
    pub transport: String,
    pub description: String,
    pub x: f64,
    pub y: f64,
}

/// A column chosen by zero-based position or by header name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Column roles; the default follows the order
/// `PATID, Date, Address, Trans, Description, Latitude, Longitude`, with the
/// sixth column read as `x` and the seventh as `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub patient: ColumnRef,
    pub date: ColumnRef,
    pub address: ColumnRef,
    pub transport: ColumnRef,
    pub description: ColumnRef,
    pub x: ColumnRef,
    pub y: ColumnRef,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            patient: ColumnRef::Index(0),
            date: ColumnRef::Index(1),
            address: ColumnRef::Index(2),
            transport: ColumnRef::Index(3),
            description: ColumnRef::Index(4),
            x: ColumnRef::Index(5),
            y: ColumnRef::Index(6),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Last day of the reporting window (`YYYYMMDD`, `MMDD`, or ISO).
    pub end_date: String,
    /// Year applied to `MMDD` dates.
    pub year: i32,
    #[serde(default = "default_days")]
    pub days: i64,
    /// Fail on the first malformed row instead of skipping it.
    #[serde(default = "default_true")]
    pub strict: bool,
    #[serde(default)]
    pub keep_duplicates: bool,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default)]
    pub columns: ColumnMap,
}

fn default_days() -> i64 {
    14
}
fn default_true() -> bool {
    true
}

impl IngestOptions {
    pub fn new(end_date: &str, year: i32) -> Self {
        Self {
            end_date: end_date.to_string(),
            year,
            days: default_days(),
            strict: true,
            keep_duplicates: false,
            has_header: true,
            columns: ColumnMap::default(),
        }
    }

    /// Inclusive `[end - (days - 1), end]`.
    pub fn date_range(&self) -> Result<(NaiveDate, NaiveDate)> {
        if self.days < 1 {
            return Err(Error::Config(format!(
                "ingest days must be at least 1, got {}",
                self.days
            )));
        }
        let end = parse_date(&self.end_date, self.year).map_err(|m| Error::Config(format!("end_date: {m}")))?;
        Ok((end - Duration::days(self.days - 1), end))
    }
}

/// `YYYYMMDD`, `YYYY-MM-DD`, or `MMDD` with the supplied year.
pub fn parse_date(s: &str, year: i32) -> std::result::Result<NaiveDate, String> {
    let t = s.trim();
    let digits = t.chars().all(|c| c.is_ascii_digit());
    let parsed = match t.len() {
        4 if digits => NaiveDate::from_ymd_opt(year, t[..2].parse().unwrap(), t[2..].parse().unwrap()),
        8 if digits => NaiveDate::parse_from_str(t, "%Y%m%d").ok(),
        10 => NaiveDate::parse_from_str(t, "%Y-%m-%d").ok(),
        _ => None,
    };
    parsed.ok_or_else(|| format!("unparseable date {t:?}"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub kept: usize,
    pub dropped_by_date: usize,
    pub dropped_by_window: usize,
    pub dropped_duplicates: usize,
    pub skipped_invalid: usize,
}

#[derive(Clone, Debug)]
pub struct IngestOutput {
    pub pattern: PointPattern,
    pub records: Vec<VisitRecord>,
    pub report: IngestReport,
}

struct Resolved([usize; 7]);

fn resolve(map: &ColumnMap, header: Option<&csv::StringRecord>) -> Result<Resolved> {
    let refs = [
        &map.patient,
        &map.date,
        &map.address,
        &map.transport,
        &map.description,
        &map.x,
        &map.y,
    ];
    let mut out = [0; 7];
    for (slot, r) in out.iter_mut().zip(refs) {
        *slot = match r {
            ColumnRef::Index(i) => *i,
            ColumnRef::Name(name) => header
                .and_then(|h| h.iter().position(|c| c.trim() == name))
                .ok_or_else(|| Error::Config(format!("column {name:?} not found in header")))?,
        };
    }
    Ok(Resolved(out))
}

fn parse_row(row: &csv::StringRecord, cols: &Resolved, year: i32) -> std::result::Result<VisitRecord, String> {
    let field = |k: usize| {
        row.get(cols.0[k])
            .map(str::trim)
            .ok_or_else(|| format!("missing column {}", cols.0[k]))
    };
    let coord = |k: usize| -> std::result::Result<f64, String> {
        let s = field(k)?;
        let v: f64 = s.parse().map_err(|_| format!("unparseable coordinate {s:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite coordinate {s:?}"))
        }
    };
    Ok(VisitRecord {
        patient: field(0)?.to_string(),
        date: parse_date(field(1)?, year)?,
        address: field(2)?.to_string(),
        transport: field(3)?.to_string(),
        description: field(4)?.to_string(),
        x: coord(5)?,
        y: coord(6)?,
    })
}

pub fn ingest_reader<R: Read>(reader: R, options: &IngestOptions, window: &Window) -> Result<IngestOutput> {
    let (start, end) = options.date_range()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = if options.has_header {
        Some(rdr.headers()?.clone())
    } else {
        None
    };
    let cols = resolve(&options.columns, header.as_ref())?;
    let mut report = IngestReport::default();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        report.rows += 1;
        let rec = match parse_row(&row, &cols, options.year) {
            Ok(r) => r,
            Err(message) if options.strict => return Err(Error::Parse { row: line, message }),
            Err(message) => {
                log::warn!("skipping row {line}: {message}");
                report.skipped_invalid += 1;
                continue;
            }
        };
        if !options.keep_duplicates && !seen.insert(row.iter().map(str::to_string).collect()) {
            report.dropped_duplicates += 1;
            continue;
        }
        if rec.date < start || rec.date > end {
            report.dropped_by_date += 1;
            continue;
        }
        if !window.contains(&Point::new(rec.x, rec.y)) {
            report.dropped_by_window += 1;
            continue;
        }
        records.push(rec);
    }
    report.kept = records.len();
    if report.rows == 0 {
        log::warn!("input contains no visit records");
    }
    log::info!(
        "ingest {}..{}: {} rows, kept {}, dropped {} by date, {} by window, {} duplicates, {} invalid",
        start,
        end,
        report.rows,
        report.kept,
        report.dropped_by_date,
        report.dropped_by_window,
        report.dropped_duplicates,
        report.skipped_invalid
    );
    let points = records.iter().map(|r| Point::new(r.x, r.y)).collect();
    Ok(IngestOutput {
        pattern: PointPattern::new(points, window.clone())?,
        records,
        report,
    })
}

pub fn ingest(path: &Path, options: &IngestOptions, window: &Window) -> Result<IngestOutput> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, options, window)
}
