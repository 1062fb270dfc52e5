//! Loading and screening of closing-price histories.
//!
//! Input is long-format CSV (`date,ticker,close`), pivoted into a
//! date × ticker matrix with an explicit missing mask. Nothing is imputed:
//! gaps stay gaps and downstream correlations use pairwise-complete rows.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Close value read as a missing observation (as is an empty field).
pub const MISSING_CLOSE: &str = "NA";
pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    /// Row-major `dates × tickers`; `None` marks a missing observation.
    prices: Vec<Option<f64>>,
}

impl PriceMatrix {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if rows.len() != dates.len() {
            return Err(Error::DimensionMismatch { expected: dates.len(), got: rows.len() });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!("dates not strictly increasing at {}", w[1])));
        }
        let distinct: BTreeSet<&String> = tickers.iter().collect();
        if distinct.len() != tickers.len() {
            return Err(Error::InvalidConfig("duplicate ticker".into()));
        }
        let mut prices = Vec::with_capacity(dates.len() * tickers.len());
        for row in rows {
            if row.len() != tickers.len() {
                return Err(Error::DimensionMismatch { expected: tickers.len(), got: row.len() });
            }
            for p in row {
                if let Some(v) = p {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::NonPositivePrice { line: 0, value: v });
                    }
                }
                prices.push(p);
            }
        }
        let m = Self { dates, tickers, prices };
        if let Some(c) = (0..m.tickers.len()).find(|&c| m.observations(c, 0..m.dates.len()) == 0) {
            return Err(Error::InvalidConfig(format!("ticker {} has no observations", m.tickers[c])));
        }
        Ok(m)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.prices[row * self.tickers.len() + col]
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_none()
    }

    pub fn missing_count(&self) -> usize {
        self.prices.iter().filter(|p| p.is_none()).count()
    }

    /// Present observations of ticker `col` within `rows`.
    pub fn observations(&self, col: usize, rows: Range<usize>) -> usize {
        rows.filter(|&r| self.get(r, col).is_some()).count()
    }

    pub fn window(&self, rows: Range<usize>) -> PriceWindow<'_> {
        assert!(rows.end <= self.dates.len(), "window past the last date");
        PriceWindow { matrix: self, rows }
    }

    /// Keep only the given rows and columns.
    pub fn select(&self, rows: Range<usize>, cols: &[usize]) -> Result<Self> {
        let dates = self.dates[rows.clone()].to_vec();
        let tickers = cols.iter().map(|&c| self.tickers[c].clone()).collect();
        let data = rows
            .map(|r| cols.iter().map(|&c| self.get(r, c)).collect())
            .collect();
        Self::new(dates, tickers, data)
    }
}

/// A contiguous run of rows of a [`PriceMatrix`].
#[derive(Debug, Clone)]
pub struct PriceWindow<'a> {
    pub matrix: &'a PriceMatrix,
    pub rows: Range<usize>,
}

impl PriceWindow<'_> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last_date(&self) -> NaiveDate {
        self.matrix.dates[self.rows.end - 1]
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    date: String,
    ticker: String,
    close: String,
}

pub fn load_price_csv(path: impl AsRef<Path>) -> Result<PriceMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_price_csv(file)
}

/// Parse long-format `date,ticker,close` CSV. Tickers are sorted so that
/// writing and re-reading a matrix reproduces it exactly.
///
/// An empty or `NA` close marks the cell as missing; this is how a date with
/// no prices at all is kept.
pub fn read_price_csv(reader: impl Read) -> Result<PriceMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["date", "ticker", "close"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("header must be `date,ticker,close`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut cells: BTreeMap<(NaiveDate, String), Option<f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record.deserialize(Some(&headers)).map_err(|e| Error::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        let date = NaiveDate::parse_from_str(&row.date, DATE_FORMAT)
            .map_err(|_| Error::BadDate { line, value: row.date.clone() })?;
        if row.ticker.is_empty() {
            return Err(Error::MalformedRow { line, reason: "empty ticker".into() });
        }
        let close = if row.close.is_empty() || row.close == MISSING_CLOSE {
            None
        } else {
            let close: f64 = row.close.parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("close {:?} is not a number", row.close),
            })?;
            if !(close.is_finite() && close > 0.0) {
                return Err(Error::NonPositivePrice { line, value: close });
            }
            Some(close)
        };
        if cells.insert((date, row.ticker.clone()), close).is_some() {
            return Err(Error::DuplicateKey { line, date: row.date, ticker: row.ticker });
        }
    }
    let dates: Vec<NaiveDate> = cells.keys().map(|(d, _)| *d).collect::<BTreeSet<_>>().into_iter().collect();
    let tickers: Vec<String> = cells.keys().map(|(_, t)| t.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let col_of: BTreeMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut rows = vec![vec![None; tickers.len()]; dates.len()];
    let mut row_idx = 0;
    for ((date, ticker), close) in &cells {
        while dates[row_idx] != *date {
            row_idx += 1;
        }
        rows[row_idx][col_of[ticker.as_str()]] = *close;
    }
    PriceMatrix::new(dates, tickers, rows)
}

/// Write the matrix back out as long-format CSV, skipping missing cells. A
/// date without any price gets a single row with an empty close.
pub fn write_price_csv(prices: &PriceMatrix, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "ticker", "close"])?;
    for (r, date) in prices.dates.iter().enumerate() {
        let date = date.format(DATE_FORMAT).to_string();
        let mut written = false;
        for (c, ticker) in prices.tickers.iter().enumerate() {
            if let Some(p) = prices.get(r, c) {
                w.write_record([date.as_str(), ticker.as_str(), p.to_string().as_str()])?;
                written = true;
            }
        }
        if !written {
            w.write_record([date.as_str(), prices.tickers[0].as_str(), ""])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningAction {
    /// Below the coverage threshold but kept.
    Flagged,
    /// Below the coverage threshold and removed (strict mode).
    Dropped,
    /// No observation inside the window at all.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningEntry {
    pub ticker: String,
    pub coverage: f64,
    pub action: ScreeningAction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScreeningReport {
    pub entries: Vec<ScreeningEntry>,
}

impl ScreeningReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tickers a strict run removes (or did remove).
    pub fn strict_removals(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| matches!(e.action, ScreeningAction::Flagged | ScreeningAction::Dropped))
            .map(|e| e.ticker.as_str())
            .collect()
    }
}

/// Restrict to `[start, end]` and report coverage.
///
/// Every ticker with at least one observation in the window is kept. Tickers
/// below `min_coverage` are flagged, or dropped when `strict` is set. Tickers
/// with no observation in the window are excluded since no correlation can be
/// formed for them.
pub fn screen_entities(
    prices: &PriceMatrix,
    start: NaiveDate,
    end: NaiveDate,
    min_coverage: f64,
    strict: bool,
) -> Result<(PriceMatrix, ScreeningReport)> {
    if !(0.0..=1.0).contains(&min_coverage) {
        return Err(Error::InvalidConfig(format!("min_coverage {min_coverage} is outside [0, 1]")));
    }
    let first = prices.dates.partition_point(|d| *d < start);
    let last = prices.dates.partition_point(|d| *d <= end);
    if first >= last {
        return Err(Error::EmptyWindow { start: start.to_string(), end: end.to_string() });
    }
    let rows = first..last;
    let mut report = ScreeningReport::default();
    let mut keep = Vec::new();
    for (c, ticker) in prices.tickers.iter().enumerate() {
        let seen = prices.observations(c, rows.clone());
        let coverage = seen as f64 / rows.len() as f64;
        let action = if seen == 0 {
            Some(ScreeningAction::Excluded)
        } else if coverage < min_coverage {
            Some(if strict { ScreeningAction::Dropped } else { ScreeningAction::Flagged })
        } else {
            None
        };
        if let Some(action) = action {
            log::info!("screening {ticker}: coverage {coverage:.3} -> {action:?}");
            report.entries.push(ScreeningEntry { ticker: ticker.clone(), coverage, action });
        }
        if !matches!(action, Some(ScreeningAction::Excluded | ScreeningAction::Dropped)) {
            keep.push(c);
        }
    }
    Ok((prices.select(rows, &keep)?, report))
}
