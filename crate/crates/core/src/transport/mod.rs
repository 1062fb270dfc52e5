//! Neighbourhood probability measures and exact Wasserstein-1 distances
//! under the hop metric.

mod flow;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HopDistanceMatrix, MarketGraph};

pub use oracle::wasserstein1_oracle;

const MASS_TOL: f64 = 1e-12;

/// How neighbour masses are derived from the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Mass proportional to the distance weight of the connecting edge.
    #[default]
    EdgeWeight,
    /// Equal mass on every neighbour.
    Uniform,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge_weight" | "edge-weight" => Ok(Weighting::EdgeWeight),
            "uniform" => Ok(Weighting::Uniform),
            other => Err(Error::InvalidConfig(format!("unknown weighting {other:?}"))),
        }
    }
}

/// A probability measure with finite support on graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMeasure {
    support: Vec<usize>,
    masses: Vec<f64>,
}

impl NodeMeasure {
    pub fn new(support: Vec<usize>, masses: Vec<f64>) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} support points but {} masses",
                support.len(),
                masses.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(Error::InvalidMeasure("support nodes are not distinct".into()));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidMeasure(format!("mass {m} is not positive")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("masses sum to {total}")));
        }
        Ok(Self { support, masses })
    }

    pub fn dirac(node: usize) -> Self {
        Self { support: vec![node], masses: vec![1.0] }
    }

    pub fn uniform(nodes: &[usize]) -> Result<Self> {
        let k = nodes.len() as f64;
        Self::new(nodes.to_vec(), vec![1.0 / k; nodes.len()])
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass_of(&self, node: usize) -> f64 {
        self.support
            .iter()
            .position(|&v| v == node)
            .map_or(0.0, |i| self.masses[i])
    }
}

/// Measure on the neighbours of `node`.
///
/// With [`Weighting::EdgeWeight`] each neighbour receives mass proportional
/// to the edge weight; neighbours joined by a zero-weight edge receive no mass,
/// and if every incident weight is zero the measure falls back to uniform.
pub fn node_measure(graph: &MarketGraph, node: usize, weighting: Weighting) -> Result<NodeMeasure> {
    if node >= graph.node_count() {
        return Err(Error::UnknownNode(node));
    }
    let neighbors = graph.neighbors(node);
    if neighbors.is_empty() {
        return Err(Error::IsolatedNode(node));
    }
    if weighting == Weighting::Uniform {
        return NodeMeasure::uniform(neighbors);
    }
    let weights: Vec<f64> = neighbors
        .iter()
        .map(|&v| graph.weight(node, v).expect("neighbour edge"))
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return NodeMeasure::uniform(neighbors);
    }
    let (support, masses): (Vec<usize>, Vec<f64>) = neighbors
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| (v, w / total))
        .unzip();
    NodeMeasure::new(support, masses)
}

/// An optimal coupling between two measures and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `plan[i][j]` is the mass moved from `mu.support()[i]` to `nu.support()[j]`.
    pub plan: Vec<Vec<f64>>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let cols = self.plan.first().map_or(0, Vec::len);
        (0..cols).map(|j| self.plan.iter().map(|r| r[j]).sum()).collect()
    }
}

fn hop(d: &HopDistanceMatrix, a: usize, b: usize) -> Result<u32> {
    if a >= d.size() {
        return Err(Error::UnknownNode(a));
    }
    if b >= d.size() {
        return Err(Error::UnknownNode(b));
    }
    d.get(a, b).ok_or(Error::DisconnectedPair(a, b))
}

/// Exact Wasserstein-1 distance between `mu` and `nu` under hop distances `d`.
///
/// Mass shared by both measures at the same node stays in place (optimal for
/// any metric cost); the remainder is routed by min-cost flow.
pub fn wasserstein1(mu: &NodeMeasure, nu: &NodeMeasure, d: &HopDistanceMatrix) -> Result<TransportPlan> {
    let p = mu.support.len();
    let q = nu.support.len();
    let mut costs = vec![0u32; p * q];
    for (i, &a) in mu.support.iter().enumerate() {
        for (j, &b) in nu.support.iter().enumerate() {
            costs[i * q + j] = hop(d, a, b)?;
        }
    }

    let mut plan = vec![vec![0.0; q]; p];
    let mut supply = mu.masses.clone();
    let mut demand = nu.masses.clone();
    for (i, &a) in mu.support.iter().enumerate() {
        if let Some(j) = nu.support.iter().position(|&b| b == a) {
            let kept = supply[i].min(demand[j]);
            plan[i][j] = kept;
            supply[i] -= kept;
            demand[j] -= kept;
        }
    }

    let sources: Vec<usize> = (0..p).filter(|&i| supply[i] > flow::FLOW_EPS).collect();
    let sinks: Vec<usize> = (0..q).filter(|&j| demand[j] > flow::FLOW_EPS).collect();
    let s: Vec<f64> = sources.iter().map(|&i| supply[i]).collect();
    let t: Vec<f64> = sinks.iter().map(|&j| demand[j]).collect();
    let moved = flow::solve_transport(&s, &t, |a, b| costs[sources[a] * q + sinks[b]]);
    for (a, row) in moved.iter().enumerate() {
        for (b, &f) in row.iter().enumerate() {
            plan[sources[a]][sinks[b]] += f;
        }
    }

    let cost = plan
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &f)| (i, j, f)))
        .map(|(i, j, f)| f * f64::from(costs[i * q + j]))
        .sum();
    Ok(TransportPlan { plan, cost })
}
