//! Independent oracles and generators shared by the integration tests.

#![allow(dead_code)]

use oricci::graph::{hop_distances, HopDistanceMatrix, MarketGraph};
use oricci::transport::NodeMeasure;
use oricci::{AveragingMode, Weighting};
use rand::seq::SliceRandom;
use rand::Rng;

/// W1 through the dual: the maximum of `sum f (mu - nu)` over integer-valued
/// 1-Lipschitz potentials `f` with values in `0..=diameter`, enumerated
/// exhaustively. Integer potentials suffice because hop distances are integers.
pub fn dual_w1(mu: &NodeMeasure, nu: &NodeMeasure, d: &HopDistanceMatrix) -> f64 {
    let mut nodes: Vec<usize> = mu.support().iter().chain(nu.support()).copied().collect();
    nodes.sort_unstable();
    nodes.dedup();
    let excess: Vec<f64> = nodes.iter().map(|&v| mu.mass_of(v) - nu.mass_of(v)).collect();
    let levels = d.diameter() as usize + 1;
    assert!(levels.pow(nodes.len() as u32) <= 5_000_000, "dual oracle too large");
    let mut f = vec![0usize; nodes.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        let lipschitz = (0..nodes.len()).all(|i| {
            (i + 1..nodes.len()).all(|j| f[i].abs_diff(f[j]) as u32 <= d.raw(nodes[i], nodes[j]))
        });
        if lipschitz {
            let v: f64 = f.iter().zip(&excess).map(|(&fi, e)| fi as f64 * e).sum();
            best = best.max(v);
        }
        let mut k = 0;
        loop {
            if k == f.len() {
                return best;
            }
            f[k] += 1;
            if f[k] < levels {
                break;
            }
            f[k] = 0;
            k += 1;
        }
    }
}

/// Measure of `v` written out from the definition.
pub fn measure_by_hand(g: &MarketGraph, v: usize, weighting: Weighting) -> NodeMeasure {
    let nbrs = g.neighbors(v).to_vec();
    let weights: Vec<f64> = match weighting {
        Weighting::Uniform => vec![1.0; nbrs.len()],
        Weighting::EdgeWeight => nbrs.iter().map(|&u| g.weight(v, u).unwrap()).collect(),
    };
    let total: f64 = weights.iter().sum();
    let (support, masses): (Vec<usize>, Vec<f64>) =
        nbrs.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).map(|(u, w)| (u, w / total)).unzip();
    NodeMeasure::new(support, masses).unwrap()
}

/// Average curvature using the dual oracle for every W1.
pub fn oracle_average(g: &MarketGraph, mode: AveragingMode, weighting: Weighting) -> f64 {
    let d = hop_distances(g);
    let n = g.node_count();
    let pairs: Vec<(usize, usize)> = match mode {
        AveragingMode::Edges => g.edge_keys(),
        AveragingMode::Pairs => (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect(),
    };
    let total: f64 = pairs
        .iter()
        .map(|&(a, b)| {
            let w = dual_w1(&measure_by_hand(g, a, weighting), &measure_by_hand(g, b, weighting), &d);
            1.0 - w / f64::from(d.get(a, b).unwrap())
        })
        .sum();
    total / pairs.len() as f64
}

/// Connected Erdos-Renyi graph with weights in `[0.05, 2)`.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, p: f64) -> MarketGraph {
    loop {
        let mut g = MarketGraph::with_size(n);
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    g.add_edge(a, b, rng.random_range(0.05..2.0), None).unwrap();
                }
            }
        }
        if g.is_connected() {
            return g;
        }
    }
}

/// Uniform random labelled tree from a Pruefer sequence, unit weights.
pub fn random_tree(rng: &mut impl Rng, n: usize) -> MarketGraph {
    let mut g = MarketGraph::with_size(n);
    if n == 2 {
        g.add_edge(0, 1, 1.0, None).unwrap();
        return g;
    }
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    for &s in &seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        g.add_edge(leaf, s, 1.0, None).unwrap();
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    g.add_edge(rest[0], rest[1], 1.0, None).unwrap();
    g
}

/// Random measure on `k` distinct nodes of `0..n` with masses that are multiples of `1/q`.
pub fn random_rational_measure(rng: &mut impl Rng, n: usize, k: usize, q: usize) -> NodeMeasure {
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    nodes.truncate(k);
    // composition of q into k positive parts via k - 1 distinct cut points
    let mut cuts: Vec<usize> = (1..q).collect();
    cuts.shuffle(rng);
    cuts.truncate(k - 1);
    cuts.sort_unstable();
    let mut units = Vec::with_capacity(k);
    let mut last = 0;
    for c in cuts.into_iter().chain(std::iter::once(q)) {
        units.push(c - last);
        last = c;
    }
    NodeMeasure::new(nodes, units.iter().map(|&u| u as f64 / q as f64).collect()).unwrap()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn induces_connected(g: &MarketGraph, subset: &[usize]) -> bool {
    let mut seen = vec![subset[0]];
    let mut i = 0;
    while i < seen.len() {
        let v = seen[i];
        for &u in g.neighbors(v) {
            if subset.contains(&u) && !seen.contains(&u) {
                seen.push(u);
            }
        }
        i += 1;
    }
    seen.len() == subset.len()
}

/// Pearson correlation from the textbook formula over complete pairs.
pub fn pearson_by_hand(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}
