//! Daily open/close/dividend records and their CSV representation.
//!
//! The input format is a header line followed by one row per trading day.
//! Columns are matched by header name (case-insensitive); `date`, `open` and
//! `close` are required, `dividend` and `volume` are optional and any other
//! column is ignored.

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::NaiveDate;
use thiserror::Error;

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: cannot parse {field} value `{value}`")]
    Unparseable {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("row {row}: {field} must be {requirement}, got {value}")]
    OutOfRange {
        row: usize,
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("series `{0}` has no rows")]
    Empty(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One trading day. `dividend` is cash per share paid to holders over the
/// night that ends at this bar's open.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub close: f64,
    pub dividend: f64,
    pub volume: Option<f64>,
}

impl Bar {
    pub fn new(date: NaiveDate, open: f64, close: f64) -> Self {
        Self {
            date,
            open,
            close,
            dividend: 0.0,
            volume: None,
        }
    }

    pub fn with_dividend(mut self, dividend: f64) -> Self {
        self.dividend = dividend;
        self
    }

    fn validate(&self, row: usize) -> Result<(), IngestError> {
        check_positive(row, "open", self.open)?;
        check_positive(row, "close", self.close)?;
        if !(self.dividend.is_finite() && self.dividend >= 0.0) {
            return Err(IngestError::OutOfRange {
                row,
                field: "dividend",
                requirement: "finite and >= 0",
                value: self.dividend,
            });
        }
        if let Some(v) = self.volume {
            if !(v.is_finite() && v >= 0.0) {
                return Err(IngestError::OutOfRange {
                    row,
                    field: "volume",
                    requirement: "finite and >= 0",
                    value: v,
                });
            }
        }
        Ok(())
    }
}

fn check_positive(row: usize, field: &'static str, value: f64) -> Result<(), IngestError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(IngestError::OutOfRange {
            row,
            field,
            requirement: "finite and > 0",
            value,
        })
    }
}

/// A non-empty, strictly date-ordered sequence of bars for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    bars: Vec<Bar>,
}

impl PriceSeries {
    /// Sorts `bars` by date and validates every bar. Row numbers in errors are
    /// 1-based positions in the input vector.
    pub fn new(symbol: impl Into<String>, bars: Vec<Bar>) -> Result<Self, IngestError> {
        let symbol = symbol.into();
        if bars.is_empty() {
            return Err(IngestError::Empty(symbol));
        }
        for (i, bar) in bars.iter().enumerate() {
            bar.validate(i + 1)?;
        }
        let mut bars = bars;
        bars.sort_by_key(|b| b.date);
        if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(IngestError::DuplicateDate(w[0].date));
        }
        Ok(Self { symbol, bars })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Multiplies every price and dividend by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, IngestError> {
        let bars = self
            .bars
            .iter()
            .map(|b| Bar {
                open: b.open * factor,
                close: b.close * factor,
                dividend: b.dividend * factor,
                ..b.clone()
            })
            .collect();
        Self::new(self.symbol.clone(), bars)
    }

    /// Writes the series in the same format [`parse_ohlc_csv`] reads. The
    /// volume column is emitted only when at least one bar carries a volume.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        let with_volume = self.bars.iter().any(|b| b.volume.is_some());
        let mut out = csv::Writer::from_writer(writer);
        if with_volume {
            out.write_record(["date", "open", "close", "dividend", "volume"])?;
        } else {
            out.write_record(["date", "open", "close", "dividend"])?;
        }
        for b in &self.bars {
            let mut rec = vec![
                b.date.format(DATE_FORMAT).to_string(),
                b.open.to_string(),
                b.close.to_string(),
                b.dividend.to_string(),
            ];
            if with_volume {
                rec.push(b.volume.map(|v| v.to_string()).unwrap_or_default());
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to an in-memory buffer cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

struct Columns {
    date: usize,
    open: usize,
    close: usize,
    dividend: Option<usize>,
    volume: Option<usize>,
}

impl Columns {
    fn locate(header: &csv::StringRecord) -> Result<Self, IngestError> {
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
        };
        Ok(Self {
            date: find("date").ok_or(IngestError::MissingColumn("date"))?,
            open: find("open").ok_or(IngestError::MissingColumn("open"))?,
            close: find("close").ok_or(IngestError::MissingColumn("close"))?,
            dividend: find("dividend"),
            volume: find("volume"),
        })
    }
}

fn parse_number(row: usize, field: &'static str, raw: &str) -> Result<f64, IngestError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| IngestError::Unparseable {
            row,
            field,
            value: raw.to_string(),
        })
}

fn parse_optional(row: usize, field: &'static str, raw: &str) -> Result<Option<f64>, IngestError> {
    if raw.trim().is_empty() {
        Ok(None)
    } else {
        parse_number(row, field, raw).map(Some)
    }
}

/// Parses a daily bar table. Rows may appear in any order; the result is
/// sorted by date. Error row numbers count data rows from 1 (the header is
/// not counted).
pub fn parse_ohlc_csv<R: Read>(reader: R, symbol: &str) -> Result<PriceSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let cols = Columns::locate(&header)?;

    let mut bars = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(IngestError::ColumnCount {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let raw_date = &record[cols.date];
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| {
            IngestError::Unparseable {
                row,
                field: "date",
                value: raw_date.to_string(),
            }
        })?;
        let bar = Bar {
            date,
            open: parse_number(row, "open", &record[cols.open])?,
            close: parse_number(row, "close", &record[cols.close])?,
            dividend: match cols.dividend {
                Some(c) => parse_optional(row, "dividend", &record[c])?.unwrap_or(0.0),
                None => 0.0,
            },
            volume: match cols.volume {
                Some(c) => parse_optional(row, "volume", &record[c])?,
                None => None,
            },
        };
        bar.validate(row)?;
        if !seen.insert(date) {
            return Err(IngestError::DuplicateDate(date));
        }
        bars.push(bar);
    }
    PriceSeries::new(symbol, bars)
}

pub fn parse_ohlc_str(text: &str, symbol: &str) -> Result<PriceSeries, IngestError> {
    parse_ohlc_csv(text.as_bytes(), symbol)
}
