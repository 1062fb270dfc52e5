//! Exhaustive Wasserstein-1 for tiny rational instances.
//!
//! Masses are scaled to integer units over their common denominator and
//! every assignment of source units to target units is searched, so the
//! optimum is exact. Kept independent of the flow solver so the two can
//! check each other.

use std::collections::HashMap;

use super::NodeMeasure;
use crate::error::{Error, Result};
use crate::graph::HopDistanceMatrix;

const MAX_DENOMINATOR: usize = 12;
const MAX_SUPPORT: usize = 8;
const UNIT_TOL: f64 = 1e-9;

fn integer_units(masses: &[f64], q: usize) -> Option<Vec<u8>> {
    let mut units = Vec::with_capacity(masses.len());
    for &m in masses {
        let scaled = m * q as f64;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > UNIT_TOL || rounded < 1.0 {
            return None;
        }
        units.push(rounded as u8);
    }
    (units.iter().map(|&u| usize::from(u)).sum::<usize>() == q).then_some(units)
}

fn common_denominator(mu: &NodeMeasure, nu: &NodeMeasure) -> Option<(usize, Vec<u8>, Vec<u8>)> {
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let a = integer_units(mu.masses(), q)?;
        let b = integer_units(nu.masses(), q)?;
        Some((q, a, b))
    })
}

struct Search<'a> {
    sources: Vec<usize>,
    cost: &'a [Vec<u32>],
    memo: HashMap<(usize, Vec<u8>), u32>,
}

impl Search<'_> {
    /// Cheapest way to place source units `unit..` given remaining target capacity.
    fn best(&mut self, unit: usize, remaining: &mut Vec<u8>) -> u32 {
        if unit == self.sources.len() {
            return 0;
        }
        if let Some(&v) = self.memo.get(&(unit, remaining.clone())) {
            return v;
        }
        let src = self.sources[unit];
        let mut best = u32::MAX;
        for j in 0..remaining.len() {
            if remaining[j] == 0 {
                continue;
            }
            remaining[j] -= 1;
            let rest = self.best(unit + 1, remaining);
            remaining[j] += 1;
            best = best.min(self.cost[src][j].saturating_add(rest));
        }
        self.memo.insert((unit, remaining.clone()), best);
        best
    }
}

/// Exact W1 by exhaustive search over integral unit assignments.
///
/// Requires masses that are multiples of `1/q` for some `q <= 12` and at most
/// eight support points in total.
pub fn wasserstein1_oracle(mu: &NodeMeasure, nu: &NodeMeasure, d: &HopDistanceMatrix) -> Result<f64> {
    let total = mu.support().len() + nu.support().len();
    if total > MAX_SUPPORT {
        return Err(Error::OracleBudget(format!("{total} support points (max {MAX_SUPPORT})")));
    }
    let (q, mu_units, nu_units) = common_denominator(mu, nu).ok_or_else(|| {
        Error::OracleBudget(format!("masses are not multiples of 1/q for any q <= {MAX_DENOMINATOR}"))
    })?;
    let mut cost = Vec::with_capacity(mu.support().len());
    for &a in mu.support() {
        let mut row = Vec::with_capacity(nu.support().len());
        for &b in nu.support() {
            if a >= d.size() || b >= d.size() {
                return Err(Error::UnknownNode(a.max(b)));
            }
            row.push(d.get(a, b).ok_or(Error::DisconnectedPair(a, b))?);
        }
        cost.push(row);
    }
    let sources = mu_units
        .iter()
        .enumerate()
        .flat_map(|(i, &u)| std::iter::repeat_n(i, usize::from(u)))
        .collect();
    let mut search = Search { sources, cost: &cost, memo: HashMap::new() };
    let mut remaining = nu_units;
    let units = search.best(0, &mut remaining);
    Ok(f64::from(units) / q as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{hop_distances, MarketGraph};

    #[test]
    fn equal_measures_cost_zero() {
        let d = hop_distances(&MarketGraph::complete(3, 1.0));
        let mu = NodeMeasure::new(vec![0, 1, 2], vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(wasserstein1_oracle(&mu, &mu, &d).unwrap(), 0.0);
    }

    #[test]
    fn halves_across_a_unit_edge() {
        // mu = 1/2 on each of {0, 1}; nu = 1/2 on each of {1, 2} along a path:
        // matching 0->1, 1->2 costs 1/2 + 1/2; matching 0->2, 1->1 costs 2/2.
        let d = hop_distances(&MarketGraph::path(&[1.0, 1.0]).unwrap());
        let mu = NodeMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        let nu = NodeMeasure::new(vec![1, 2], vec![0.5, 0.5]).unwrap();
        assert_eq!(wasserstein1_oracle(&mu, &nu, &d).unwrap(), 1.0);

        let mu = NodeMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        let nu = NodeMeasure::new(vec![0, 2], vec![0.5, 0.5]).unwrap();
        assert_eq!(wasserstein1_oracle(&mu, &nu, &d).unwrap(), 0.5);
    }

    #[test]
    fn budget_is_enforced() {
        let d = hop_distances(&MarketGraph::complete(10, 1.0));
        let mu = NodeMeasure::uniform(&[0, 1, 2, 3, 4]).unwrap();
        let nu = NodeMeasure::uniform(&[5, 6, 7, 8]).unwrap();
        assert!(matches!(wasserstein1_oracle(&mu, &nu, &d), Err(Error::OracleBudget(_))));

        let mu = NodeMeasure::new(vec![0, 1], vec![0.3, 0.7]).unwrap();
        let nu = NodeMeasure::dirac(2);
        assert!(wasserstein1_oracle(&mu, &nu, &d).is_ok());
        let mu = NodeMeasure::new(vec![0, 1], vec![1.0 / 13.0, 12.0 / 13.0]).unwrap();
        assert!(matches!(wasserstein1_oracle(&mu, &nu, &d), Err(Error::OracleBudget(_))));
    }
}
