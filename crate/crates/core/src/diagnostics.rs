//! Autocorrelation of indicator series and parameter sweeps.

use std::collections::BTreeSet;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::indicator::{indicator_series, IndicatorSeries, WindowConfig, GAP_MARKER};
use crate::ingestion::{PriceMatrix, DATE_FORMAT};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_MAX_LAG: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub acf: Vec<f64>,
    /// Half-width of the white-noise band.
    pub band: f64,
    pub confidence: f64,
    /// Number of non-gap observations.
    pub n_effective: usize,
}

impl AcfResult {
    /// Share of lags `1..=max_lag` whose ACF lies outside the band.
    pub fn fraction_outside(&self, max_lag: usize) -> f64 {
        let lags = max_lag.min(self.lags.len() - 1);
        if lags == 0 {
            return 0.0;
        }
        let outside = self.acf[1..=lags].iter().filter(|a| a.abs() > self.band).count();
        outside as f64 / lags as f64
    }

    /// `lag,acf,band` rows.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lag", "acf", "band"])?;
        for (lag, acf) in self.lags.iter().zip(&self.acf) {
            w.write_record([lag.to_string(), acf.to_string(), self.band.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Two-sided standard normal quantile for `confidence`.
pub fn normal_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence {confidence} must lie in (0, 1)")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Sample ACF with the biased (`1/n`) normalisation.
///
/// Gaps (`None`) are skipped pairwise: lag-`k` products only use positions
/// where both ends are present, and the band uses the count of present values.
pub fn autocorrelation_with(series: &[Option<f64>], max_lag: usize, confidence: f64) -> Result<AcfResult> {
    let present: Vec<f64> = series.iter().flatten().copied().collect();
    let n = present.len();
    if max_lag == 0 || n <= max_lag || series.len() <= max_lag {
        return Err(Error::SeriesTooShort { len: n, max_lag });
    }
    let mean = present.iter().sum::<f64>() / n as f64;
    let denom: f64 = present.iter().map(|x| (x - mean) * (x - mean)).sum();
    if denom <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    let acf = (0..=max_lag)
        .map(|k| {
            let num: f64 = series
                .iter()
                .zip(&series[k..])
                .filter_map(|(a, b)| Some(((*a)? - mean) * ((*b)? - mean)))
                .sum();
            (num / denom).clamp(-1.0, 1.0)
        })
        .collect();
    Ok(AcfResult {
        lags: (0..=max_lag).collect(),
        acf,
        band: normal_quantile(confidence)? / (n as f64).sqrt(),
        confidence,
        n_effective: n,
    })
}

pub fn autocorrelation(series: &[Option<f64>], max_lag: usize) -> Result<AcfResult> {
    autocorrelation_with(series, max_lag, DEFAULT_CONFIDENCE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Xi,
    #[serde(rename = "T")]
    Window,
}

impl SweepAxis {
    fn label(self, value: f64) -> String {
        match self {
            SweepAxis::Xi => format!("xi={value}"),
            SweepAxis::Window => format!("T={value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub series: Vec<IndicatorSeries>,
    /// Companion ACF per series (T sweeps only); `None` where it is undefined.
    pub acf: Vec<Option<AcfResult>>,
}

/// Series of a sweep laid out on one shared date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedColumns {
    pub dates: Vec<NaiveDate>,
    pub labels: Vec<String>,
    /// `columns[j][i]` is the value of series `j` on `dates[i]`.
    pub columns: Vec<Vec<Option<f64>>>,
}

impl SweepResult {
    /// Union of all window dates; a series without a window on a date has a gap there.
    pub fn aligned(&self) -> AlignedColumns {
        let dates: Vec<NaiveDate> =
            self.series.iter().flat_map(|s| s.dates.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
        let columns = self
            .series
            .iter()
            .map(|s| {
                let mut col = vec![None; dates.len()];
                let mut i = 0;
                for (d, v) in s.dates.iter().zip(&s.values) {
                    while dates[i] < *d {
                        i += 1;
                    }
                    col[i] = *v;
                }
                col
            })
            .collect();
        AlignedColumns { dates, labels: self.values.iter().map(|&v| self.axis.label(v)).collect(), columns }
    }

    /// `date,<axis>=<value>,...` with one column per sweep value.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let aligned = self.aligned();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(aligned.labels.iter().cloned());
        w.write_record(&header)?;
        for (i, date) in aligned.dates.iter().enumerate() {
            let mut row = vec![date.format(DATE_FORMAT).to_string()];
            row.extend(
                aligned.columns.iter().map(|c| c[i].map_or_else(|| GAP_MARKER.to_string(), |v| v.to_string())),
            );
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn sweep(prices: &PriceMatrix, configs: Vec<WindowConfig>) -> Result<Vec<IndicatorSeries>> {
    if configs.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    for c in &configs {
        c.validate()?;
    }
    configs.par_iter().map(|c| indicator_series(prices, c)).collect()
}

/// One series per threshold, everything else fixed.
pub fn xi_sweep(prices: &PriceMatrix, base: &WindowConfig, xi_values: &[f64]) -> Result<SweepResult> {
    let configs = xi_values.iter().map(|&xi| WindowConfig { xi, ..*base }).collect();
    let series = sweep(prices, configs)?;
    Ok(SweepResult { axis: SweepAxis::Xi, values: xi_values.to_vec(), acf: vec![None; series.len()], series })
}

/// One series per window length, each with its ACF up to lag 40 (or shorter
/// when the series is short).
pub fn t_sweep(prices: &PriceMatrix, base: &WindowConfig, t_values: &[usize]) -> Result<SweepResult> {
    for &t in t_values {
        if t >= prices.n_dates() {
            return Err(Error::InsufficientData { needed: t + 1, got: prices.n_dates() });
        }
    }
    let configs = t_values.iter().map(|&window| WindowConfig { window, ..*base }).collect();
    let series = sweep(prices, configs)?;
    let acf = series
        .iter()
        .map(|s| {
            let present = s.values.iter().flatten().count();
            let max_lag = DEFAULT_MAX_LAG.min(present.saturating_sub(1));
            autocorrelation(&s.values, max_lag).ok()
        })
        .collect();
    Ok(SweepResult { axis: SweepAxis::Window, values: t_values.iter().map(|&t| t as f64).collect(), series, acf })
}
