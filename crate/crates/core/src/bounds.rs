//! Curvature change under single-edge additions.
//!
//! A [`PerturbationInstance`] pairs a graph `G` with `G*`, the same graph plus
//! one new edge `xy`. The checks compare the actual change `k*(a,b) - k(a,b)`
//! against several upper bounds and report the slack `rhs - lhs`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::curvature_from_measures;
use crate::error::{Error, Result};
use crate::graph::{hop_distances, HopDistanceMatrix, MarketGraph};
use crate::transport::{node_measure, wasserstein1, NodeMeasure, Weighting};

/// Reports with slack at or above this count as satisfied.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PerturbationInstance {
    pub g: MarketGraph,
    pub g_star: MarketGraph,
    pub added_edge: (usize, usize),
    pub d: HopDistanceMatrix,
    pub d_star: HopDistanceMatrix,
    /// Seed of the generator that produced the instance, if any.
    pub seed: Option<u64>,
}

impl PerturbationInstance {
    /// `G*` is `g` plus the edge `xy` with weight `w`.
    pub fn new(g: MarketGraph, x: usize, y: usize, w: f64) -> Result<Self> {
        if g.has_edge(x, y) {
            return Err(Error::EdgeExists(x, y));
        }
        let mut g_star = g.clone();
        g_star.add_edge(x, y, w, None)?;
        let d = hop_distances(&g);
        let d_star = hop_distances(&g_star);
        Ok(Self { g, g_star, added_edge: (x.min(y), x.max(y)), d, d_star, seed: None })
    }

    /// The instance obtained by removing `edge` from `g_star`.
    pub fn by_removal(g_star: &MarketGraph, edge: (usize, usize)) -> Result<Self> {
        let (x, y) = edge;
        let w = g_star.weight(x, y).ok_or(Error::NotSubgraph(x, y))?;
        let mut g = MarketGraph::new(g_star.nodes().to_vec())?;
        for ((a, b), attr) in g_star.edges() {
            if (a, b) != (x.min(y), x.max(y)) {
                g.add_edge(a, b, attr.weight, attr.correlation)?;
            }
        }
        Self::new(g, x, y, w)
    }

    fn is_affected(&self, v: usize) -> bool {
        v == self.added_edge.0 || v == self.added_edge.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    Prop1First,
    Prop1Sup,
    LemmaNode,
    Prop2First,
    Prop2Sup,
    Prop2Relaxed,
}

impl BoundName {
    pub const ALL: [BoundName; 6] = [
        BoundName::Prop1First,
        BoundName::Prop1Sup,
        BoundName::LemmaNode,
        BoundName::Prop2First,
        BoundName::Prop2Sup,
        BoundName::Prop2Relaxed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::Prop1First => "prop1_first",
            BoundName::Prop1Sup => "prop1_sup",
            BoundName::LemmaNode => "lemma_node",
            BoundName::Prop2First => "prop2_first",
            BoundName::Prop2Sup => "prop2_sup",
            BoundName::Prop2Relaxed => "prop2_relaxed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: BoundName,
    /// The node pair, or `(v, v)` for the per-node lemma.
    pub pair: (usize, usize),
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl BoundReport {
    pub fn new(bound_name: BoundName, pair: (usize, usize), lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self { bound_name, pair, lhs, rhs, slack, satisfied: slack >= -SLACK_TOL }
    }
}

/// `max |d(u,v) - d*(u,v)|` over all node pairs.
pub fn sup_distance_change(d: &HopDistanceMatrix, d_star: &HopDistanceMatrix) -> Result<f64> {
    if d.size() != d_star.size() {
        return Err(Error::DimensionMismatch { expected: d.size(), got: d_star.size() });
    }
    let mut sup = 0.0f64;
    for u in 0..d.size() {
        for v in u + 1..d.size() {
            let diff = match (d.get(u, v), d_star.get(u, v)) {
                (Some(a), Some(b)) => f64::from(a.abs_diff(b)),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            };
            sup = sup.max(diff);
        }
    }
    Ok(sup)
}

fn measures(g: &MarketGraph, weighting: Weighting) -> Result<Vec<NodeMeasure>> {
    (0..g.node_count()).map(|v| node_measure(g, v, weighting)).collect()
}

fn hops(d: &HopDistanceMatrix, a: usize, b: usize) -> Result<f64> {
    d.get(a, b).map(f64::from).ok_or(Error::DisconnectedPair(a, b))
}

/// Measures of both graphs, built once per instance.
pub struct InstanceMeasures {
    pub mu: Vec<NodeMeasure>,
    pub mu_star: Vec<NodeMeasure>,
}

impl InstanceMeasures {
    pub fn new(instance: &PerturbationInstance, weighting: Weighting) -> Result<Self> {
        Ok(Self { mu: measures(&instance.g, weighting)?, mu_star: measures(&instance.g_star, weighting)? })
    }
}

fn check_nodes(instance: &PerturbationInstance, a: usize, b: usize) -> Result<()> {
    let n = instance.g.node_count();
    if a >= n || b >= n {
        return Err(Error::UnknownNode(a.max(b)));
    }
    if a == b {
        return Err(Error::SelfLoop(a));
    }
    Ok(())
}

/// Both single-pair bounds for `(a, b)`. The second is `None` when `a` or `b`
/// is an endpoint of the added edge.
pub fn check_prop1_with(
    instance: &PerturbationInstance,
    m: &InstanceMeasures,
    a: usize,
    b: usize,
) -> Result<(BoundReport, Option<BoundReport>)> {
    check_nodes(instance, a, b)?;
    let (d, d_star) = (&instance.d, &instance.d_star);
    let k = curvature_from_measures(&m.mu[a], &m.mu[b], d, a, b)?;
    let k_star = curvature_from_measures(&m.mu_star[a], &m.mu_star[b], d_star, a, b)?;
    let lhs = k_star - k;
    let ds = hops(d_star, a, b)?;
    let w = wasserstein1(&m.mu[a], &m.mu[b], d)?.cost;
    let w_star = wasserstein1(&m.mu_star[a], &m.mu_star[b], d_star)?.cost;
    let pair = (a.min(b), a.max(b));
    let first = BoundReport::new(BoundName::Prop1First, pair, lhs, (w - w_star) / ds);
    let sup = (!instance.is_affected(a) && !instance.is_affected(b))
        .then(|| sup_distance_change(d, d_star).map(|s| BoundReport::new(BoundName::Prop1Sup, pair, lhs, s / ds)))
        .transpose()?;
    Ok((first, sup))
}

pub fn check_prop1(
    instance: &PerturbationInstance,
    a: usize,
    b: usize,
    weighting: Weighting,
) -> Result<(BoundReport, Option<BoundReport>)> {
    check_prop1_with(instance, &InstanceMeasures::new(instance, weighting)?, a, b)
}

/// `W^d(mu_v, mu*_v) <= 1 / (deg_G(v) + 1)` for an endpoint `v` of the added edge.
pub fn check_lemma_affected_with(instance: &PerturbationInstance, m: &InstanceMeasures, v: usize) -> Result<BoundReport> {
    if !instance.is_affected(v) {
        return Err(Error::InvalidConfig(format!("node {v} is not an endpoint of the added edge")));
    }
    let lhs = wasserstein1(&m.mu[v], &m.mu_star[v], &instance.d)?.cost;
    let rhs = 1.0 / (instance.g.degree(v) as f64 + 1.0);
    Ok(BoundReport::new(BoundName::LemmaNode, (v, v), lhs, rhs))
}

pub fn check_lemma_affected(instance: &PerturbationInstance, v: usize, weighting: Weighting) -> Result<BoundReport> {
    check_lemma_affected_with(instance, &InstanceMeasures::new(instance, weighting)?, v)
}

/// The degree bounds at the added edge: the transport form, the sup-distance
/// form and the form relaxed by `d*(x, y) >= 1`.
pub fn check_prop2_with(instance: &PerturbationInstance, m: &InstanceMeasures) -> Result<[BoundReport; 3]> {
    let (x, y) = instance.added_edge;
    let (d, d_star) = (&instance.d, &instance.d_star);
    let k = curvature_from_measures(&m.mu[x], &m.mu[y], d, x, y)?;
    let k_star = curvature_from_measures(&m.mu_star[x], &m.mu_star[y], d_star, x, y)?;
    let lhs = k_star - k;
    let ds = hops(d_star, x, y)?;
    let degree_terms = 1.0 / (instance.g.degree(x) as f64 + 1.0) + 1.0 / (instance.g.degree(y) as f64 + 1.0);
    let w = wasserstein1(&m.mu_star[x], &m.mu_star[y], d)?.cost;
    let w_star = wasserstein1(&m.mu_star[x], &m.mu_star[y], d_star)?.cost;
    let sup = sup_distance_change(d, d_star)?;
    Ok([
        BoundReport::new(BoundName::Prop2First, (x, y), lhs, (w - w_star + degree_terms) / ds),
        BoundReport::new(BoundName::Prop2Sup, (x, y), lhs, (sup + degree_terms) / ds),
        BoundReport::new(BoundName::Prop2Relaxed, (x, y), lhs, sup + degree_terms),
    ])
}

pub fn check_prop2(instance: &PerturbationInstance, weighting: Weighting) -> Result<[BoundReport; 3]> {
    check_prop2_with(instance, &InstanceMeasures::new(instance, weighting)?)
}

/// Every check on one instance: both single-pair bounds for all pairs, the
/// lemma at both endpoints and the degree bounds.
pub fn check_instance(instance: &PerturbationInstance, weighting: Weighting) -> Result<Vec<BoundReport>> {
    let m = InstanceMeasures::new(instance, weighting)?;
    let n = instance.g.node_count();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let (first, sup) = check_prop1_with(instance, &m, a, b)?;
            out.push(first);
            out.extend(sup);
        }
    }
    let (x, y) = instance.added_edge;
    out.push(check_lemma_affected_with(instance, &m, x)?);
    out.push(check_lemma_affected_with(instance, &m, y)?);
    out.extend(check_prop2_with(instance, &m)?);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub weighting: Weighting,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { trials: 1000, seed: 0, min_nodes: 4, max_nodes: 12, weighting: Weighting::EdgeWeight }
    }
}

/// Connected Erdos-Renyi graph with random positive weights plus one random
/// non-edge, reproducible from `seed`.
pub fn random_instance(seed: u64, min_nodes: usize, max_nodes: usize) -> Result<PerturbationInstance> {
    if min_nodes < 3 || max_nodes < min_nodes {
        return Err(Error::InvalidConfig(format!("node range {min_nodes}..={max_nodes} (need 3 <= min <= max)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(min_nodes..=max_nodes);
    let p = rng.random_range(0.15..0.6);
    loop {
        let mut g = MarketGraph::with_size(n);
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    g.add_edge(a, b, rng.random_range(0.05..2.0), None)?;
                }
            }
        }
        if !g.is_connected() || g.edge_count() == n * (n - 1) / 2 {
            continue;
        }
        let missing: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| !g.has_edge(a, b)).collect();
        let (x, y) = missing[rng.random_range(0..missing.len())];
        let w = rng.random_range(0.05..2.0);
        let mut inst = PerturbationInstance::new(g, x, y, w)?;
        inst.seed = Some(seed);
        return Ok(inst);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub bound_name: BoundName,
    pub checks: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub min_slack_seed: Option<u64>,
    pub min_slack_pair: Option<(usize, usize)>,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    /// Instances where `d* <= d` failed somewhere; always empty for a correct BFS.
    pub distance_order_failures: Vec<u64>,
    pub summaries: Vec<BoundSummary>,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.summaries.iter().map(|s| s.violations).sum()
    }

    pub fn summary(&self, name: BoundName) -> Option<&BoundSummary> {
        self.summaries.iter().find(|s| s.bound_name == name)
    }

    pub fn all_satisfied(&self) -> bool {
        self.violations() == 0 && self.distance_order_failures.is_empty()
    }

    pub fn write_json(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    /// One row per bound: name, counts, minimum slack and where it occurred.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bound", "checks", "violations", "min_slack", "min_slack_seed", "min_slack_pair", "lhs", "rhs"])?;
        for s in &self.summaries {
            w.write_record([
                s.bound_name.as_str().to_string(),
                s.checks.to_string(),
                s.violations.to_string(),
                s.min_slack.to_string(),
                s.min_slack_seed.map_or_else(String::new, |v| v.to_string()),
                s.min_slack_pair.map_or_else(String::new, |(a, b)| format!("{a}-{b}")),
                s.worst_lhs.to_string(),
                s.worst_rhs.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn distances_ordered(inst: &PerturbationInstance) -> bool {
    let n = inst.d.size();
    (0..n).all(|u| (0..n).all(|v| inst.d_star.raw(u, v) <= inst.d.raw(u, v)))
}

fn summarize(config: SuiteConfig, results: Vec<(u64, bool, Vec<BoundReport>)>) -> SuiteReport {
    let mut summaries: Vec<BoundSummary> = BoundName::ALL
        .iter()
        .map(|&bound_name| BoundSummary {
            bound_name,
            checks: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            min_slack_seed: None,
            min_slack_pair: None,
            worst_lhs: f64::NAN,
            worst_rhs: f64::NAN,
        })
        .collect();
    let mut distance_order_failures = Vec::new();
    for (seed, ordered, reports) in results {
        if !ordered {
            distance_order_failures.push(seed);
        }
        for r in reports {
            let s = &mut summaries[BoundName::ALL.iter().position(|&b| b == r.bound_name).expect("known bound")];
            s.checks += 1;
            s.violations += usize::from(!r.satisfied);
            if r.slack < s.min_slack {
                s.min_slack = r.slack;
                s.min_slack_seed = Some(seed);
                s.min_slack_pair = Some(r.pair);
                s.worst_lhs = r.lhs;
                s.worst_rhs = r.rhs;
            }
        }
    }
    SuiteReport { config, distance_order_failures, summaries }
}

/// Runs `trials` random instances seeded `seed, seed + 1, ...`.
pub fn run_random_suite(config: SuiteConfig) -> Result<SuiteReport> {
    let results = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = config.seed.wrapping_add(i);
            let inst = random_instance(seed, config.min_nodes, config.max_nodes)?;
            Ok((seed, distances_ordered(&inst), check_instance(&inst, config.weighting)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(config, results))
}

/// `K_n` with edge `{0, 1}` removed as `G`, and `K_n` as `G*`, unit weights.
pub fn kn_minus_edge_instance(n: usize) -> Result<PerturbationInstance> {
    if n < 3 {
        return Err(Error::TooFewNodes { min: 3, got: n });
    }
    PerturbationInstance::by_removal(&MarketGraph::complete(n, 1.0), (0, 1))
}

/// Both single-pair bounds on every pair of the `K_n` minus one edge family.
pub fn kn_minus_edge_reports(n: usize, weighting: Weighting) -> Result<Vec<BoundReport>> {
    let inst = kn_minus_edge_instance(n)?;
    let m = InstanceMeasures::new(&inst, weighting)?;
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let (first, sup) = check_prop1_with(&inst, &m, a, b)?;
            out.push(first);
            out.extend(sup);
        }
    }
    Ok(out)
}

/// Sharpness runs over `ns`, summarised like the random suite with `n` in the seed column.
pub fn run_kn_family(ns: impl IntoIterator<Item = usize>, weighting: Weighting) -> Result<SuiteReport> {
    let ns: Vec<usize> = ns.into_iter().collect();
    let results = ns
        .iter()
        .map(|&n| Ok((n as u64, true, kn_minus_edge_reports(n, weighting)?)))
        .collect::<Result<Vec<_>>>()?;
    let config = SuiteConfig {
        trials: ns.len(),
        seed: 0,
        min_nodes: ns.iter().copied().min().unwrap_or(0),
        max_nodes: ns.iter().copied().max().unwrap_or(0),
        weighting,
    };
    Ok(summarize(config, results))
}
