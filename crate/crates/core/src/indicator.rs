//! Rolling-window fragility indicator.
//!
//! For each window: pairwise correlations, a distance transform, the minimum
//! spanning tree of the complete distance graph, re-insertion of every edge
//! whose correlation reaches `xi`, and finally the average Ollivier-Ricci
//! curvature of that graph. Windows advance one row at a time and are dated
//! by their last row.

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use chrono::NaiveDate;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{average_curvature, AveragingMode};
use crate::error::{Error, Result};
use crate::graph::{augment_high_value_edges, build_complete_graph, minimum_spanning_tree, MarketGraph};
use crate::ingestion::{PriceMatrix, PriceWindow, DATE_FORMAT};
use crate::transport::Weighting;

/// Correlations this close to +-1 are snapped onto the bound.
const UNIT_SNAP: f64 = 1e-12;
const MIN_OBSERVATIONS: usize = 3;

/// Maps a correlation to a non-negative distance through `x = 2 (1 - rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum DistanceTransform {
    /// `sqrt(x)`
    #[default]
    SqrtUltrametric,
    /// `x^p`
    Power(f64),
    /// `ln(1 + x)`
    Log1pScaled,
}

impl DistanceTransform {
    pub fn apply(self, rho: f64) -> f64 {
        let x = (2.0 * (1.0 - rho)).max(0.0);
        match self {
            DistanceTransform::SqrtUltrametric => x.sqrt(),
            DistanceTransform::Power(p) => x.powf(p),
            DistanceTransform::Log1pScaled => x.ln_1p(),
        }
    }
}

impl fmt::Display for DistanceTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceTransform::SqrtUltrametric => write!(f, "sqrt"),
            DistanceTransform::Power(p) => write!(f, "power:{p}"),
            DistanceTransform::Log1pScaled => write!(f, "log1p"),
        }
    }
}

impl FromStr for DistanceTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(DistanceTransform::SqrtUltrametric),
            "log1p" => Ok(DistanceTransform::Log1pScaled),
            _ => {
                let p = s
                    .strip_prefix("power:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown distance transform {s:?}")))?;
                if !(p.is_finite() && p > 0.0) {
                    return Err(Error::InvalidConfig(format!("power exponent {p} must be positive")));
                }
                Ok(DistanceTransform::Power(p))
            }
        }
    }
}

impl From<DistanceTransform> for String {
    fn from(h: DistanceTransform) -> Self {
        h.to_string()
    }
}

impl TryFrom<String> for DistanceTransform {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// What the correlations are computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    #[default]
    RawPrice,
    LogReturn,
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "raw_price" => Ok(InputMode::RawPrice),
            "log" | "log_return" => Ok(InputMode::LogReturn),
            other => Err(Error::InvalidConfig(format!("unknown input mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Observations per window.
    #[serde(rename = "T")]
    pub window: usize,
    pub xi: f64,
    pub distance: DistanceTransform,
    pub input_mode: InputMode,
    pub averaging: AveragingMode,
    pub weighting: Weighting,
}

impl WindowConfig {
    pub fn new(window: usize, xi: f64) -> Self {
        Self {
            window,
            xi,
            distance: DistanceTransform::default(),
            input_mode: InputMode::default(),
            averaging: AveragingMode::default(),
            weighting: Weighting::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 {
            return Err(Error::InvalidConfig(format!("T = {} (need at least 3)", self.window)));
        }
        if !(-1.0..=1.0).contains(&self.xi) {
            return Err(Error::InvalidConfig(format!("xi = {} is outside [-1, 1]", self.xi)));
        }
        if let DistanceTransform::Power(p) = self.distance {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidConfig(format!("power exponent {p} must be positive")));
            }
        }
        Ok(())
    }
}

/// Pairwise-complete correlations for the tickers usable in one window.
#[derive(Debug, Clone)]
pub struct WindowCorrelation {
    /// Column indices (into the price matrix) of the tickers kept.
    pub columns: Vec<usize>,
    pub labels: Vec<String>,
    pub rho: Array2<f64>,
    pub warnings: Vec<String>,
}

/// The series a window contributes for one ticker: prices, or log returns
/// between consecutive rows of the window.
fn window_values(window: &PriceWindow<'_>, col: usize, mode: InputMode) -> Vec<Option<f64>> {
    let m = window.matrix;
    match mode {
        InputMode::RawPrice => window.rows.clone().map(|r| m.get(r, col)).collect(),
        InputMode::LogReturn => window
            .rows
            .clone()
            .skip(1)
            .map(|r| match (m.get(r - 1, col), m.get(r, col)) {
                (Some(prev), Some(cur)) => Some((cur / prev).ln()),
                _ => None,
            })
            .collect(),
    }
}

enum Pearson {
    Value(f64),
    ZeroVariance,
    Insufficient(usize),
}

fn pearson(x: &[Option<f64>], y: &[Option<f64>]) -> Pearson {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    if pairs.len() < MIN_OBSERVATIONS {
        return Pearson::Insufficient(pairs.len());
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(a, b) in &pairs {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Pearson::ZeroVariance;
    }
    let mut r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    if 1.0 - r.abs() < UNIT_SNAP {
        r = r.signum();
    }
    Pearson::Value(r)
}

/// Pearson correlation for every ticker pair over pairwise-complete rows.
///
/// Tickers with fewer than three usable observations in the window are left
/// out (and noted). A pair where either side is constant gets `rho = 0` with a
/// warning. A pair sharing fewer than three rows is an error.
pub fn correlation_matrix(window: &PriceWindow<'_>, mode: InputMode) -> Result<WindowCorrelation> {
    let m = window.matrix;
    let mut warnings = Vec::new();
    let mut columns = Vec::new();
    let mut series = Vec::new();
    for col in 0..m.n_tickers() {
        let values = window_values(window, col, mode);
        let seen = values.iter().flatten().count();
        if seen < MIN_OBSERVATIONS {
            if seen > 0 {
                warnings.push(format!("{} excluded: {seen} observations in window", m.tickers()[col]));
            }
            continue;
        }
        columns.push(col);
        series.push(values);
    }
    let k = columns.len();
    let mut rho = Array2::from_diag_elem(k, 1.0);
    for i in 0..k {
        for j in i + 1..k {
            let r = match pearson(&series[i], &series[j]) {
                Pearson::Value(r) => r,
                Pearson::ZeroVariance => {
                    warnings.push(format!(
                        "zero variance for pair ({}, {}); using rho = 0",
                        m.tickers()[columns[i]],
                        m.tickers()[columns[j]]
                    ));
                    0.0
                }
                Pearson::Insufficient(overlap) => {
                    return Err(Error::InsufficientOverlap {
                        a: m.tickers()[columns[i]].clone(),
                        b: m.tickers()[columns[j]].clone(),
                        overlap,
                    })
                }
            };
            rho[[i, j]] = r;
            rho[[j, i]] = r;
        }
    }
    let labels = columns.iter().map(|&c| m.tickers()[c].clone()).collect();
    Ok(WindowCorrelation { columns, labels, rho, warnings })
}

/// Elementwise `h(rho)` with a zero diagonal.
pub fn distance_from_correlation(rho: &Array2<f64>, h: DistanceTransform) -> Result<Array2<f64>> {
    let (r, c) = rho.dim();
    if r != c {
        return Err(Error::DimensionMismatch { expected: r, got: c });
    }
    if let Some(((i, j), &v)) = rho.indexed_iter().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
        return Err(Error::CorrelationOutOfRange { row: i, col: j, value: v });
    }
    Ok(Array2::from_shape_fn((r, c), |(i, j)| if i == j { 0.0 } else { h.apply(rho[[i, j]]) }))
}

/// Complete distance graph -> minimum spanning tree -> high-correlation edges added back.
pub fn window_graph(labels: Vec<String>, rho: &Array2<f64>, config: &WindowConfig) -> Result<MarketGraph> {
    let distances = distance_from_correlation(rho, config.distance)?;
    let complete = build_complete_graph(labels, &distances, rho)?;
    let tree = minimum_spanning_tree(&complete)?;
    augment_high_value_edges(&tree, &complete, config.xi)
}

/// Rows (inclusive of the base row for returns) feeding the window that ends at `end`.
pub fn window_rows(end: usize, window: usize, mode: InputMode) -> Range<usize> {
    match mode {
        InputMode::RawPrice => end + 1 - window..end + 1,
        InputMode::LogReturn => end - window..end + 1,
    }
}

/// Row indices at which windows end: `T, T + 1, ..., n_dates - 1`.
pub fn window_end_rows(prices: &PriceMatrix, window: usize) -> Result<Range<usize>> {
    if prices.n_dates() < window + 1 {
        return Err(Error::InsufficientData { needed: window + 1, got: prices.n_dates() });
    }
    Ok(window..prices.n_dates())
}

pub fn window_correlation(prices: &PriceMatrix, end: usize, config: &WindowConfig) -> Result<WindowCorrelation> {
    let rows = window_rows(end, config.window, config.input_mode);
    correlation_matrix(&prices.window(rows), config.input_mode)
}

/// Graph of the window ending at row `end`.
pub fn window_graph_at(prices: &PriceMatrix, end: usize, config: &WindowConfig) -> Result<(MarketGraph, Vec<String>)> {
    let corr = window_correlation(prices, end, config)?;
    if corr.labels.len() < 2 {
        return Err(Error::TooFewTickers {
            date: prices.dates()[end].format(DATE_FORMAT).to_string(),
            got: corr.labels.len(),
        });
    }
    let graph = window_graph(corr.labels, &corr.rho, config)?;
    Ok((graph, corr.warnings))
}

/// A note attached to one window (a warning or the reason for a gap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowNote {
    pub date: NaiveDate,
    pub message: String,
}

/// Dated indicator values; `None` marks a window that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<Option<f64>>,
    pub config: WindowConfig,
    pub notes: Vec<WindowNote>,
}

/// Marker written for windows without a value.
pub const GAP_MARKER: &str = "NA";

#[derive(Serialize)]
struct SeriesRecord {
    date: String,
    value: Option<f64>,
}

impl IndicatorSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gap_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Values of the windows that were evaluated.
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn mean(&self) -> Option<f64> {
        let v = self.present();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// `date,value` rows; gaps are written as `NA`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "value"])?;
        for (date, value) in self.dates.iter().zip(&self.values) {
            let v = value.map_or_else(|| GAP_MARKER.to_string(), |v| v.to_string());
            w.write_record([date.format(DATE_FORMAT).to_string(), v])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// JSON array of `{date, value}` records; gaps are `null`.
    pub fn write_json(&self, writer: impl Write) -> Result<()> {
        let records: Vec<SeriesRecord> = self
            .dates
            .iter()
            .zip(&self.values)
            .map(|(d, v)| SeriesRecord { date: d.format(DATE_FORMAT).to_string(), value: *v })
            .collect();
        serde_json::to_writer_pretty(writer, &records)?;
        Ok(())
    }
}

/// Evaluate `window_value` at every window end and assemble a dated series.
///
/// Alongside the series, returns the per-window extra produced by `window_value`.
pub(crate) fn assemble_series<F, X>(
    prices: &PriceMatrix,
    config: &WindowConfig,
    window_value: F,
) -> Result<(IndicatorSeries, Vec<Option<X>>)>
where
    F: Fn(usize) -> Result<(f64, Vec<String>, X)> + Sync,
    X: Send,
{
    config.validate()?;
    let ends = window_end_rows(prices, config.window)?;
    let results: Vec<(Option<f64>, Vec<String>, Option<X>)> = ends
        .clone()
        .into_par_iter()
        .map(|end| match window_value(end) {
            Ok((v, warnings, extra)) => (Some(v), warnings, Some(extra)),
            Err(e) => (None, vec![format!("gap: {e}")], None),
        })
        .collect();
    let mut extras = Vec::with_capacity(results.len());
    let mut series = IndicatorSeries {
        dates: Vec::with_capacity(results.len()),
        values: Vec::with_capacity(results.len()),
        config: *config,
        notes: Vec::new(),
    };
    for (end, (value, messages, extra)) in ends.zip(results) {
        extras.push(extra);
        let date = prices.dates()[end];
        for message in messages {
            log::debug!("{date}: {message}");
            series.notes.push(WindowNote { date, message });
        }
        series.dates.push(date);
        series.values.push(value);
    }
    Ok((series, extras))
}

/// The indicator over every window of `prices`.
pub fn indicator_series(prices: &PriceMatrix, config: &WindowConfig) -> Result<IndicatorSeries> {
    assemble_series(prices, config, |end| {
        let (graph, warnings) = window_graph_at(prices, end, config)?;
        let report = average_curvature(&graph, config.averaging, config.weighting)?;
        Ok((report.average, warnings, ()))
    })
    .map(|(series, _)| series)
}
