//! Primal-dual min-cost flow for small transportation problems with integer costs.
//!
//! Each phase runs Dijkstra on reduced costs to raise node potentials, then
//! pushes a maximum flow (Dinic) through the zero-reduced-cost residual arcs.
//! Costs are hop counts, so potentials stay integral and the admissibility
//! test is exact even though the flows themselves are real numbers.

/// Residual capacities at or below this are treated as exhausted.
pub(crate) const FLOW_EPS: f64 = 1e-14;

const INF_DIST: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    rev: usize,
    cap: f64,
    cost: i64,
}

struct Network {
    arcs: Vec<Vec<Arc>>,
    potential: Vec<i64>,
    level: Vec<u32>,
    cursor: Vec<usize>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Self {
            arcs: vec![Vec::new(); nodes],
            potential: vec![0; nodes],
            level: vec![0; nodes],
            cursor: vec![0; nodes],
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: f64, cost: i64) -> (usize, usize) {
        let fwd = self.arcs[from].len();
        let bwd = self.arcs[to].len();
        self.arcs[from].push(Arc { to, rev: bwd, cap, cost });
        self.arcs[to].push(Arc { to: from, rev: fwd, cap: 0.0, cost: -cost });
        (from, fwd)
    }

    fn reduced(&self, from: usize, arc: &Arc) -> i64 {
        arc.cost + self.potential[from] - self.potential[arc.to]
    }

    /// Dense Dijkstra over residual arcs; returns distances in reduced costs.
    fn shortest_paths(&self, source: usize) -> Vec<i64> {
        let n = self.arcs.len();
        let mut dist = vec![INF_DIST; n];
        let mut done = vec![false; n];
        dist[source] = 0;
        for _ in 0..n {
            let mut u = usize::MAX;
            let mut best = INF_DIST;
            for v in 0..n {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for arc in &self.arcs[u] {
                if arc.cap > FLOW_EPS {
                    let nd = best + self.reduced(u, arc);
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                    }
                }
            }
        }
        dist
    }

    fn admissible(&self, from: usize, arc: &Arc) -> bool {
        arc.cap > FLOW_EPS && self.reduced(from, arc) == 0
    }

    fn build_levels(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = u32::MAX);
        self.level[source] = 0;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for arc in &self.arcs[u] {
                if self.level[arc.to] == u32::MAX && self.admissible(u, arc) {
                    self.level[arc.to] = self.level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[sink] != u32::MAX
    }

    fn push(&mut self, u: usize, sink: usize, limit: f64) -> f64 {
        if u == sink {
            return limit;
        }
        while self.cursor[u] < self.arcs[u].len() {
            let arc = self.arcs[u][self.cursor[u]];
            if self.level[arc.to] == self.level[u] + 1 && self.admissible(u, &arc) {
                let pushed = self.push(arc.to, sink, limit.min(arc.cap));
                if pushed > FLOW_EPS {
                    self.arcs[u][self.cursor[u]].cap -= pushed;
                    self.arcs[arc.to][arc.rev].cap += pushed;
                    return pushed;
                }
            }
            self.cursor[u] += 1;
        }
        0.0
    }
}

/// Minimum-cost plan moving `supply` onto `demand` where `cost(i, j)` is the
/// integer price per unit of mass. Both sides should carry the same total;
/// the smaller total is routed.
pub(crate) fn solve_transport(
    supply: &[f64],
    demand: &[f64],
    cost: impl Fn(usize, usize) -> u32,
) -> Vec<Vec<f64>> {
    let p = supply.len();
    let q = demand.len();
    let mut plan = vec![vec![0.0; q]; p];
    if p == 0 || q == 0 {
        return plan;
    }
    let source = 0;
    let sink = p + q + 1;
    let mut net = Network::new(p + q + 2);
    for (i, &s) in supply.iter().enumerate() {
        net.add_arc(source, 1 + i, s, 0);
    }
    let mut middle = vec![vec![(0, 0); q]; p];
    for (i, row) in middle.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = net.add_arc(1 + i, 1 + p + j, f64::INFINITY, i64::from(cost(i, j)));
        }
    }
    for (j, &t) in demand.iter().enumerate() {
        net.add_arc(1 + p + j, sink, t, 0);
    }

    let target = supply.iter().sum::<f64>().min(demand.iter().sum::<f64>());
    let mut routed = 0.0;
    while routed < target - FLOW_EPS {
        let dist = net.shortest_paths(source);
        let cap = dist[sink];
        if cap >= INF_DIST {
            break;
        }
        for (pot, d) in net.potential.iter_mut().zip(&dist) {
            *pot += (*d).min(cap);
        }
        let before = routed;
        while net.build_levels(source, sink) {
            net.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let f = net.push(source, sink, f64::INFINITY);
                if f <= FLOW_EPS {
                    break;
                }
                routed += f;
            }
        }
        if routed <= before {
            break;
        }
    }

    for (i, row) in middle.iter().enumerate() {
        for (j, &(from, idx)) in row.iter().enumerate() {
            let arc = net.arcs[from][idx];
            plan[i][j] = net.arcs[arc.to][arc.rev].cap;
        }
    }
    plan
}
