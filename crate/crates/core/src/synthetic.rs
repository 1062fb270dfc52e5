//! Fixed-seed synthetic price corpora.
//!
//! Returns are drawn from simple Gaussian factor models and compounded into
//! prices starting at 100. Dates run over weekdays from 2000-01-03.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingestion::PriceMatrix;

/// Calm block-correlated regime followed by a crisis with near-uniform correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSwitch {
    pub assets: usize,
    pub dates: usize,
    /// First row of the crisis regime.
    pub switch_at: usize,
    pub blocks: usize,
    /// Correlation contributed by the market factor in the calm regime.
    pub calm_market: f64,
    /// Extra correlation shared inside a block in the calm regime.
    pub calm_block: f64,
    pub crisis_rho: f64,
    pub calm_vol: f64,
    pub crisis_vol: f64,
    pub seed: u64,
}

impl Default for RegimeSwitch {
    fn default() -> Self {
        Self {
            assets: 50,
            dates: 600,
            switch_at: 300,
            blocks: 5,
            calm_market: 0.1,
            calm_block: 0.3,
            crisis_rho: 0.9,
            calm_vol: 0.01,
            crisis_vol: 0.025,
            seed: 2008,
        }
    }
}

pub fn weekdays(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

fn tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("S{i:03}")).collect()
}

fn compound(returns: Vec<Vec<f64>>, assets: usize) -> Result<PriceMatrix> {
    let dates = weekdays(start_date(), returns.len());
    let mut level = vec![100.0f64; assets];
    let rows = returns
        .into_iter()
        .enumerate()
        .map(|(t, r)| {
            if t > 0 {
                for (l, x) in level.iter_mut().zip(r) {
                    *l *= x.exp();
                }
            }
            level.iter().map(|&p| Some(p)).collect()
        })
        .collect();
    PriceMatrix::new(dates, tickers(assets), rows)
}

impl RegimeSwitch {
    pub fn generate(&self) -> Result<PriceMatrix> {
        let total = self.calm_market + self.calm_block;
        if self.assets < 2 || self.blocks == 0 || !(0.0..1.0).contains(&total) || !(0.0..1.0).contains(&self.crisis_rho) {
            return Err(Error::InvalidConfig("regime-switch parameters out of range".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut returns = Vec::with_capacity(self.dates);
        for t in 0..self.dates {
            let market = draw();
            let block: Vec<f64> = (0..self.blocks).map(|_| draw()).collect();
            let row = (0..self.assets)
                .map(|i| {
                    let eps = draw();
                    if t < self.switch_at {
                        let b = block[i * self.blocks / self.assets];
                        self.calm_vol
                            * (self.calm_market.sqrt() * market + self.calm_block.sqrt() * b + (1.0 - total).sqrt() * eps)
                    } else {
                        self.crisis_vol * (self.crisis_rho.sqrt() * market + (1.0 - self.crisis_rho).sqrt() * eps)
                    }
                })
                .collect();
            returns.push(row);
        }
        compound(returns, self.assets)
    }

    /// Whether the window over `rows` lies entirely in one regime.
    pub fn calm_rows(&self, rows: &std::ops::Range<usize>) -> bool {
        rows.end <= self.switch_at
    }

    pub fn crisis_rows(&self, rows: &std::ops::Range<usize>) -> bool {
        rows.start >= self.switch_at
    }
}

/// Independent Gaussian returns for every asset and date.
pub fn white_noise(assets: usize, dates: usize, seed: u64) -> Result<PriceMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let returns = (0..dates)
        .map(|_| {
            (0..assets)
                .map(|_| 0.01 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect();
    compound(returns, assets)
}

/// Every asset follows the same path up to a constant factor.
pub fn comoving(assets: usize, dates: usize, seed: u64) -> Result<PriceMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let returns = (0..dates)
        .map(|_| {
            let r: f64 = 0.01 * Distribution::<f64>::sample(&StandardNormal, &mut rng);
            vec![r; assets]
        })
        .collect();
    compound(returns, assets)
}

/// Named scenarios reachable from the command line.
pub fn scenario(name: &str, seed: Option<u64>) -> Result<PriceMatrix> {
    match name {
        "regime-switch" => {
            let mut s = RegimeSwitch::default();
            if let Some(seed) = seed {
                s.seed = seed;
            }
            s.generate()
        }
        "white-noise" => white_noise(20, 1600, seed.unwrap_or(7)),
        "comoving" => comoving(6, 200, seed.unwrap_or(1)),
        other => Err(Error::InvalidConfig(format!(
            "unknown synthetic scenario {other:?} (expected regime-switch, white-noise or comoving)"
        ))),
    }
}
