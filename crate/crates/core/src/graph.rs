//! Undirected weighted market graphs.
//!
//! Nodes are addressed by dense indices `0..n` and carry a string label
//! (usually a ticker). Each undirected edge is stored once under the key
//! `(min, max)` together with its distance weight and, when the graph was
//! built from a correlation matrix, the correlation it came from.

use std::collections::{BTreeMap, HashMap, VecDeque};

use ndarray::Array2;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAttr {
    pub weight: f64,
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketGraph {
    nodes: Vec<String>,
    edges: BTreeMap<(usize, usize), EdgeAttr>,
    adjacency: Vec<Vec<usize>>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl MarketGraph {
    /// Edgeless graph over the given labels.
    pub fn new(nodes: Vec<String>) -> Result<Self> {
        let mut seen = HashMap::with_capacity(nodes.len());
        for (i, id) in nodes.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(Error::DuplicateNodeId(id.clone()));
            }
        }
        let n = nodes.len();
        Ok(Self {
            nodes,
            edges: BTreeMap::new(),
            adjacency: vec![Vec::new(); n],
        })
    }

    /// Edgeless graph labelled `v0, v1, ...`.
    pub fn with_size(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("v{i}")).collect()).expect("labels are distinct")
    }

    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64, correlation: Option<f64>) -> Result<()> {
        let n = self.nodes.len();
        if a >= n {
            return Err(Error::UnknownNode(a));
        }
        if b >= n {
            return Err(Error::UnknownNode(b));
        }
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidWeight(weight));
        }
        if let Some(rho) = correlation {
            if !(-1.0..=1.0).contains(&rho) {
                return Err(Error::CorrelationOutOfRange { row: a, col: b, value: rho });
            }
        }
        let k = key(a, b);
        if self.edges.contains_key(&k) {
            return Err(Error::EdgeExists(k.0, k.1));
        }
        self.edges.insert(k, EdgeAttr { weight, correlation });
        insert_sorted(&mut self.adjacency[a], b);
        insert_sorted(&mut self.adjacency[b], a);
        Ok(())
    }

    /// Complete graph on `n` nodes with a common weight and no correlations.
    pub fn complete(n: usize, weight: f64) -> Self {
        let mut g = Self::with_size(n);
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b, weight, None).expect("valid complete graph");
            }
        }
        g
    }

    /// Star with centre `0` and `n - 1` unit-weight leaves.
    pub fn star(n: usize) -> Self {
        let mut g = Self::with_size(n);
        for leaf in 1..n {
            g.add_edge(0, leaf, 1.0, None).expect("valid star");
        }
        g
    }

    /// Path `v0 - v1 - ... ` whose consecutive edges take the given weights.
    pub fn path(weights: &[f64]) -> Result<Self> {
        let mut g = Self::with_size(weights.len() + 1);
        for (i, &w) in weights.iter().enumerate() {
            g.add_edge(i, i + 1, w, None)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn label(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    /// Edges in ascending `(min, max)` order.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), &EdgeAttr)> + '_ {
        self.edges.iter().map(|(k, v)| (*k, v))
    }

    pub fn edge_keys(&self) -> Vec<(usize, usize)> {
        self.edges.keys().copied().collect()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&EdgeAttr> {
        self.edges.get(&key(a, b))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&key(a, b))
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.edge(a, b).map(|e| e.weight)
    }

    pub fn correlation(&self, a: usize, b: usize) -> Option<f64> {
        self.edge(a, b).and_then(|e| e.correlation)
    }

    /// Neighbours of `node` in ascending index order.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.values().map(|e| e.weight).sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        bfs_levels(self, 0).iter().all(|&d| d != UNREACHABLE)
    }

    /// Same nodes, every weight multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Self> {
        let mut g = Self::new(self.nodes.clone())?;
        for ((a, b), e) in self.edges() {
            g.add_edge(a, b, e.weight * factor, e.correlation)?;
        }
        Ok(g)
    }
}

fn insert_sorted(list: &mut Vec<usize>, value: usize) {
    if let Err(pos) = list.binary_search(&value) {
        list.insert(pos, value);
    }
}

/// Marker stored for pairs in different components.
pub const UNREACHABLE: u32 = u32::MAX;

/// All-pairs hop (unweighted shortest path) distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopDistanceMatrix {
    n: usize,
    data: Vec<u32>,
}

impl HopDistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Hop count, or `None` when the pair is disconnected.
    pub fn get(&self, a: usize, b: usize) -> Option<u32> {
        let v = self.data[a * self.n + b];
        (v != UNREACHABLE).then_some(v)
    }

    /// Raw entry, [`UNREACHABLE`] for disconnected pairs.
    pub fn raw(&self, a: usize, b: usize) -> u32 {
        self.data[a * self.n + b]
    }

    pub fn is_connected(&self) -> bool {
        self.data.iter().all(|&v| v != UNREACHABLE)
    }

    /// Largest entry among connected pairs.
    pub fn diameter(&self) -> u32 {
        self.data.iter().copied().filter(|&v| v != UNREACHABLE).max().unwrap_or(0)
    }
}

fn bfs_levels(graph: &MarketGraph, source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; graph.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &v in graph.neighbors(u) {
            if dist[v] == UNREACHABLE {
                dist[v] = next;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Breadth-first search from every node.
pub fn hop_distances(graph: &MarketGraph) -> HopDistanceMatrix {
    let n = graph.node_count();
    let mut data = Vec::with_capacity(n * n);
    for source in 0..n {
        data.extend(bfs_levels(graph, source));
    }
    HopDistanceMatrix { n, data }
}

fn check_square(m: &Array2<f64>, n: usize) -> Result<()> {
    let (r, c) = m.dim();
    if r != n {
        return Err(Error::DimensionMismatch { expected: n, got: r });
    }
    if c != n {
        return Err(Error::DimensionMismatch { expected: n, got: c });
    }
    for i in 0..n {
        for j in i + 1..n {
            if (m[[i, j]] - m[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(Error::Asymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Complete graph whose edge `ij` carries `distances[i][j]` and `correlations[i][j]`.
pub fn build_complete_graph(
    labels: Vec<String>,
    distances: &Array2<f64>,
    correlations: &Array2<f64>,
) -> Result<MarketGraph> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::TooFewNodes { min: 2, got: n });
    }
    check_square(distances, n)?;
    check_square(correlations, n)?;
    for i in 0..n {
        if distances[[i, i]].abs() > SYMMETRY_TOL {
            return Err(Error::InvalidConfig(format!(
                "distance diagonal entry {i} is {} (expected 0)",
                distances[[i, i]]
            )));
        }
    }
    let mut g = MarketGraph::new(labels)?;
    for i in 0..n {
        for j in i + 1..n {
            let d = distances[[i, j]];
            if d < 0.0 || d.is_nan() {
                return Err(Error::NegativeDistance { row: i, col: j, value: d });
            }
            let rho = correlations[[i, j]];
            if !(-1.0..=1.0).contains(&rho) {
                return Err(Error::CorrelationOutOfRange { row: i, col: j, value: rho });
            }
            g.add_edge(i, j, d, Some(rho))?;
        }
    }
    Ok(g)
}

/// Frontier edge ordering for Prim: weight first, then the node-index pair.
type Frontier = (f64, (usize, usize));

fn frontier_key(weight: f64, a: usize, b: usize) -> Frontier {
    (weight, key(a, b))
}

fn frontier_less(x: &Frontier, y: &Frontier) -> bool {
    match x.0.total_cmp(&y.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => x.1 < y.1,
    }
}

/// Prim's algorithm from node 0.
///
/// Among frontier edges of equal weight the lexicographically smallest
/// `(min, max)` index pair wins, so the tree is a deterministic function of
/// the input.
pub fn minimum_spanning_tree(graph: &MarketGraph) -> Result<MarketGraph> {
    let n = graph.node_count();
    let mut tree = MarketGraph::new(graph.nodes.clone())?;
    if n == 0 {
        return Ok(tree);
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<(f64, (usize, usize))>> = vec![None; n];
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for &v in graph.neighbors(current) {
            if in_tree[v] {
                continue;
            }
            let w = graph.weight(current, v).expect("adjacent");
            let cand = frontier_key(w, current, v);
            if best[v].as_ref().is_none_or(|b| frontier_less(&cand, b)) {
                best[v] = Some(cand);
            }
        }
        let mut pick: Option<(usize, Frontier)> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if let Some(cand) = best[v] {
                if pick.as_ref().is_none_or(|(_, p)| frontier_less(&cand, p)) {
                    pick = Some((v, cand));
                }
            }
        }
        let (v, (_, (a, b))) = pick.ok_or(Error::Disconnected)?;
        let attr = graph.edge(a, b).expect("frontier edge exists");
        tree.add_edge(a, b, attr.weight, attr.correlation)?;
        in_tree[v] = true;
        current = v;
    }
    Ok(tree)
}

/// Union of the tree edges and every base edge whose correlation is at least `xi`.
pub fn augment_high_value_edges(mst: &MarketGraph, base: &MarketGraph, xi: f64) -> Result<MarketGraph> {
    if !(-1.0..=1.0).contains(&xi) {
        return Err(Error::InvalidConfig(format!("xi = {xi} is outside [-1, 1]")));
    }
    if mst.node_count() != base.node_count() {
        return Err(Error::DimensionMismatch { expected: base.node_count(), got: mst.node_count() });
    }
    let mut out = MarketGraph::new(base.nodes.clone())?;
    for ((a, b), _) in mst.edges() {
        let attr = base.edge(a, b).ok_or(Error::NotSubgraph(a, b))?;
        out.add_edge(a, b, attr.weight, attr.correlation)?;
    }
    for ((a, b), attr) in base.edges() {
        let rho = attr.correlation.ok_or(Error::MissingCorrelation(a, b))?;
        if rho >= xi && !out.has_edge(a, b) {
            out.add_edge(a, b, attr.weight, attr.correlation)?;
        }
    }
    Ok(out)
}

/// Subgraph induced by `subset`; node `i` of the result is the `i`-th smallest index in `subset`.
pub fn induced_subgraph(graph: &MarketGraph, subset: &[usize]) -> Result<MarketGraph> {
    let mut chosen = subset.to_vec();
    chosen.sort_unstable();
    chosen.dedup();
    if chosen.len() != subset.len() {
        return Err(Error::InvalidConfig("subset contains duplicate nodes".into()));
    }
    if chosen.len() < 2 {
        return Err(Error::TooFewNodes { min: 2, got: chosen.len() });
    }
    if let Some(&bad) = chosen.iter().find(|&&v| v >= graph.node_count()) {
        return Err(Error::UnknownNode(bad));
    }
    let labels = chosen.iter().map(|&v| graph.nodes[v].clone()).collect();
    let mut out = MarketGraph::new(labels)?;
    for (i, &u) in chosen.iter().enumerate() {
        for (j, &v) in chosen.iter().enumerate().skip(i + 1) {
            if let Some(attr) = graph.edge(u, v) {
                out.add_edge(i, j, attr.weight, attr.correlation)?;
            }
        }
    }
    Ok(out)
}
