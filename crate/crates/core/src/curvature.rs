//! Ollivier-Ricci curvature of node pairs and graph-level averages.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{hop_distances, HopDistanceMatrix, MarketGraph};
use crate::transport::{node_measure, wasserstein1, NodeMeasure, Weighting};

/// Which node pairs enter the average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMode {
    /// Every edge of the graph.
    #[default]
    Edges,
    /// Every unordered pair of distinct nodes.
    Pairs,
}

impl std::str::FromStr for AveragingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" => Ok(AveragingMode::Edges),
            "pairs" => Ok(AveragingMode::Pairs),
            other => Err(Error::InvalidConfig(format!("unknown averaging mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub per_pair: BTreeMap<(usize, usize), f64>,
    pub average: f64,
    pub mode: AveragingMode,
}

/// `1 - W1(mu_a, mu_b) / d(a, b)` for precomputed measures.
pub fn curvature_from_measures(
    mu_a: &NodeMeasure,
    mu_b: &NodeMeasure,
    d: &HopDistanceMatrix,
    a: usize,
    b: usize,
) -> Result<f64> {
    if a == b {
        return Err(Error::SelfLoop(a));
    }
    let hops = d.get(a, b).ok_or(Error::DisconnectedPair(a, b))?;
    let w = wasserstein1(mu_a, mu_b, d)?.cost;
    Ok(1.0 - w / f64::from(hops))
}

/// Curvature of the pair `(a, b)`; `a` and `b` need not be adjacent.
pub fn edge_curvature(
    graph: &MarketGraph,
    d: &HopDistanceMatrix,
    a: usize,
    b: usize,
    weighting: Weighting,
) -> Result<f64> {
    if a == b {
        return Err(Error::SelfLoop(a));
    }
    if d.get(a, b).is_none() {
        return Err(Error::DisconnectedPair(a, b));
    }
    let mu_a = node_measure(graph, a, weighting)?;
    let mu_b = node_measure(graph, b, weighting)?;
    curvature_from_measures(&mu_a, &mu_b, d, a, b)
}

/// Curvature of every edge or every node pair, and their mean.
pub fn average_curvature(graph: &MarketGraph, mode: AveragingMode, weighting: Weighting) -> Result<CurvatureReport> {
    let d = hop_distances(graph);
    let pairs: Vec<(usize, usize)> = match mode {
        AveragingMode::Edges => {
            if graph.edge_count() == 0 {
                return Err(Error::NoEdges);
            }
            graph.edge_keys()
        }
        AveragingMode::Pairs => {
            if !d.is_connected() {
                return Err(Error::Disconnected);
            }
            let n = graph.node_count();
            if n < 2 {
                return Err(Error::TooFewNodes { min: 2, got: n });
            }
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
        }
    };

    let mut needed = vec![false; graph.node_count()];
    for &(a, b) in &pairs {
        needed[a] = true;
        needed[b] = true;
    }
    let measures = needed
        .iter()
        .enumerate()
        .map(|(v, &need)| need.then(|| node_measure(graph, v, weighting)).transpose())
        .collect::<Result<Vec<_>>>()?;

    let values = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mu_a = measures[a].as_ref().expect("measure built");
            let mu_b = measures[b].as_ref().expect("measure built");
            curvature_from_measures(mu_a, mu_b, &d, a, b)
        })
        .collect::<Result<Vec<f64>>>()?;

    let average = values.iter().sum::<f64>() / values.len() as f64;
    Ok(CurvatureReport {
        per_pair: pairs.into_iter().zip(values).collect(),
        average,
        mode,
    })
}
