//! Sub-sampling: pick the `m`-node induced subgraph with extremal average
//! curvature and track it over windows.
//!
//! The search is a steepest single-swap local search over connected
//! `m`-subsets with random restarts.

use std::io::Write;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{average_curvature, AveragingMode, CurvatureReport};
use crate::error::{Error, Result};
use crate::graph::{augment_high_value_edges, build_complete_graph, induced_subgraph, MarketGraph};
use crate::indicator::{assemble_series, distance_from_correlation, window_correlation, IndicatorSeries, WindowConfig};
use crate::ingestion::{PriceMatrix, DATE_FORMAT};
use crate::transport::Weighting;

/// Improvements smaller than this are not taken.
const IMPROVEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Minimize,
    Maximize,
}

impl Objective {
    /// True when `a` is strictly better than `b`.
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Objective::Minimize => a < b - IMPROVEMENT_TOL,
            Objective::Maximize => a > b + IMPROVEMENT_TOL,
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimize" | "min" => Ok(Objective::Minimize),
            "maximize" | "max" => Ok(Objective::Maximize),
            other => Err(Error::InvalidConfig(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleConfig {
    pub m: usize,
    pub objective: Objective,
    pub seed: u64,
    pub max_iters: usize,
    pub restarts: usize,
    pub averaging: AveragingMode,
    pub weighting: Weighting,
}

impl SubsampleConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            objective: Objective::default(),
            seed: 0,
            max_iters: 1000,
            restarts: 0,
            averaging: AveragingMode::default(),
            weighting: Weighting::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m < 2 || self.m > n {
            return Err(Error::InvalidConfig(format!("m = {} must lie in [2, {n}]", self.m)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsampleResult {
    /// Sorted node indices of the chosen subset.
    pub nodes: Vec<usize>,
    /// Curvature of the induced subgraph, indexed by position within `nodes`.
    pub report: CurvatureReport,
    /// Swaps taken by the best run.
    pub iterations: usize,
    /// Objective value after each accepted step of the best run, starting with the initial subset.
    pub trajectory: Vec<f64>,
}

fn is_connected_subset(graph: &MarketGraph, subset: &[usize]) -> bool {
    let Some(&start) = subset.first() else { return false };
    let mut seen = vec![start];
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &u in graph.neighbors(v) {
            if subset.contains(&u) && !seen.contains(&u) {
                seen.push(u);
                stack.push(u);
            }
        }
    }
    seen.len() == subset.len()
}

fn evaluate(graph: &MarketGraph, subset: &[usize], config: &SubsampleConfig) -> Result<CurvatureReport> {
    average_curvature(&induced_subgraph(graph, subset)?, config.averaging, config.weighting)
}

/// Random connected subset grown from a random vertex.
fn grow_subset(graph: &MarketGraph, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let n = graph.node_count();
    let mut subset = vec![rng.random_range(0..n)];
    while subset.len() < m {
        let mut frontier: Vec<usize> = subset
            .iter()
            .flat_map(|&v| graph.neighbors(v).iter().copied())
            .filter(|u| !subset.contains(u))
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        let &next = frontier.choose(rng).ok_or(Error::NoConnectedSubset(m))?;
        subset.push(next);
    }
    subset.sort_unstable();
    Ok(subset)
}

fn local_search(graph: &MarketGraph, config: &SubsampleConfig, seed: u64) -> Result<SubsampleResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = graph.node_count();
    let mut subset = grow_subset(graph, config.m, &mut rng)?;
    let mut report = evaluate(graph, &subset, config)?;
    let mut trajectory = vec![report.average];
    let mut iterations = 0;
    while iterations < config.max_iters {
        let swaps: Vec<(usize, usize)> = subset
            .iter()
            .flat_map(|&out| (0..n).filter(|v| !subset.contains(v)).map(move |inn| (out, inn)))
            .collect();
        let candidates = swaps
            .par_iter()
            .map(|&(out, inn)| {
                let mut next: Vec<usize> = subset.iter().copied().filter(|&v| v != out).collect();
                next.push(inn);
                next.sort_unstable();
                if !is_connected_subset(graph, &next) {
                    return Ok(None);
                }
                let r = evaluate(graph, &next, config)?;
                Ok(Some((out, inn, next, r)))
            })
            .collect::<Result<Vec<_>>>()?;
        // swaps are generated in lexicographic (out, in) order, so the first best wins ties
        let mut best: Option<(Vec<usize>, CurvatureReport)> = None;
        for (_, _, next, r) in candidates.into_iter().flatten() {
            let incumbent = best.as_ref().map_or(report.average, |b| b.1.average);
            if config.objective.better(r.average, incumbent) {
                best = Some((next, r));
            }
        }
        let Some((next, r)) = best else { break };
        subset = next;
        report = r;
        trajectory.push(report.average);
        iterations += 1;
    }
    Ok(SubsampleResult { nodes: subset, report, iterations, trajectory })
}

/// Best of `1 + restarts` local searches; run `i` is seeded with `seed + i`.
pub fn extremal_subgraph(graph: &MarketGraph, config: &SubsampleConfig) -> Result<SubsampleResult> {
    let n = graph.node_count();
    config.validate(n)?;
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let runs = (0..=config.restarts as u64)
        .into_par_iter()
        .map(|i| local_search(graph, config, config.seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<SubsampleResult> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| config.objective.better(run.report.average, b.report.average)) {
            best = Some(run);
        }
    }
    best.ok_or(Error::NoConnectedSubset(config.m))
}

/// Indicator series on the extremal subgraph of each window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsampleSeries {
    pub series: IndicatorSeries,
    pub subset_config: SubsampleConfig,
    /// Tickers chosen in each window; `None` for gaps.
    pub subsets: Vec<Option<Vec<String>>>,
}

impl SubsampleSeries {
    /// `date,nodes` rows with the tickers joined by `;`; gaps are written as `NA`.
    pub fn write_subsets_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "nodes"])?;
        for (date, subset) in self.series.dates.iter().zip(&self.subsets) {
            let nodes = subset.as_ref().map_or_else(|| crate::indicator::GAP_MARKER.to_string(), |s| s.join(";"));
            w.write_record([date.format(DATE_FORMAT).to_string(), nodes])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Per window: the complete distance graph, its extremal `m`-subgraph, high
/// correlation edges re-added within the subset, and the average curvature.
///
/// The subgraph induced on a complete graph is itself complete, so the
/// re-adding step never changes it.
pub fn subsample_indicator_series(
    prices: &PriceMatrix,
    window: &WindowConfig,
    subset: &SubsampleConfig,
) -> Result<SubsampleSeries> {
    let sub = SubsampleConfig { averaging: window.averaging, weighting: window.weighting, ..*subset };
    if sub.m < 2 {
        return Err(Error::InvalidConfig(format!("m = {} must be at least 2", sub.m)));
    }
    let (series, extras) = assemble_series(prices, window, |end| {
        let corr = window_correlation(prices, end, window)?;
        if corr.labels.len() < sub.m {
            return Err(Error::TooFewTickers {
                date: prices.dates()[end].format(DATE_FORMAT).to_string(),
                got: corr.labels.len(),
            });
        }
        let distances = distance_from_correlation(&corr.rho, window.distance)?;
        let complete = build_complete_graph(corr.labels, &distances, &corr.rho)?;
        let found = extremal_subgraph(&complete, &sub)?;
        let chosen = induced_subgraph(&complete, &found.nodes)?;
        let graph = augment_high_value_edges(&chosen, &chosen, window.xi)?;
        let value = average_curvature(&graph, window.averaging, window.weighting)?.average;
        let names = found.nodes.iter().map(|&v| complete.label(v).to_string()).collect();
        Ok((value, corr.warnings, names))
    })?;
    Ok(SubsampleSeries { series, subset_config: sub, subsets: extras })
}
