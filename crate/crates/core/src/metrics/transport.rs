//! Balanced transportation problem solved by the primal network simplex method.
//!
//! Supplies and demands are integers, so every basic solution is integral and
//! flows are exact. The spanning tree is kept strongly feasible (zero-flow tree
//! arcs point away from the root) and the leaving arc is the last blocking arc
//! met when walking the pivot cycle from its apex, which rules out cycling.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("total supply {supply} differs from total demand {demand}")]
    Unbalanced { supply: u64, demand: u64 },
    #[error("cost matrix has {found} entries, expected {expected}")]
    CostShape { expected: usize, found: usize },
    #[error("cost matrix contains a non-finite or negative entry")]
    BadCost,
    #[error("supplies and demands must be positive")]
    ZeroMass,
    #[error("network simplex did not converge within {0} pivots")]
    NoConvergence(usize),
}

/// An optimal integral plan: `(source, sink, amount)` for every positive flow.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub flows: Vec<(usize, usize, u64)>,
    /// `Σ amount · cost`, not normalised by the total mass.
    pub cost: f64,
}

const NONE: usize = usize::MAX;

struct Network<'a> {
    sources: usize,
    sinks: usize,
    cost: &'a [f64],
    big: f64,
    flow: Vec<u64>,
    in_tree: Vec<bool>,
    tree_adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<usize>,
    potential: Vec<f64>,
}

impl Network<'_> {
    fn real_arcs(&self) -> usize {
        self.sources * self.sinks
    }

    fn root(&self) -> usize {
        self.sources + self.sinks
    }

    fn tail(&self, e: usize) -> usize {
        let real = self.real_arcs();
        if e < real {
            e / self.sinks
        } else if e < real + self.sources {
            e - real
        } else {
            self.root()
        }
    }

    fn head(&self, e: usize) -> usize {
        let real = self.real_arcs();
        if e < real {
            self.sources + e % self.sinks
        } else if e < real + self.sources {
            self.root()
        } else {
            self.sources + (e - real - self.sources)
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        let real = self.real_arcs();
        if e < real {
            self.cost[e]
        } else if e < real + self.sources {
            self.big
        } else {
            0.0
        }
    }

    fn reduced_cost(&self, e: usize) -> f64 {
        self.arc_cost(e) + self.potential[self.tail(e)] - self.potential[self.head(e)]
    }

    /// Recomputes parents, depths and potentials by a traversal from the root.
    fn rebuild(&mut self) {
        let root = self.root();
        self.parent.fill(NONE);
        self.parent_arc.fill(NONE);
        self.parent[root] = root;
        self.depth[root] = 0;
        self.potential[root] = 0.0;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for idx in 0..self.tree_adj[x].len() {
                let e = self.tree_adj[x][idx];
                let (t, h) = (self.tail(e), self.head(e));
                let y = if t == x { h } else { t };
                if self.parent[y] != NONE {
                    continue;
                }
                self.parent[y] = x;
                self.parent_arc[y] = e;
                self.depth[y] = self.depth[x] + 1;
                // tree arcs have zero reduced cost
                self.potential[y] = if t == x {
                    self.potential[x] + self.arc_cost(e)
                } else {
                    self.potential[x] - self.arc_cost(e)
                };
                queue.push_back(y);
            }
        }
    }

    fn entering_arc(&self, eps: f64) -> Option<usize> {
        let total = self.real_arcs() + self.sources + self.sinks;
        let mut best = (NONE, -eps);
        for e in 0..total {
            if self.in_tree[e] {
                continue;
            }
            let rc = self.reduced_cost(e);
            if rc < best.1 {
                best = (e, rc);
            }
        }
        (best.0 != NONE).then_some(best.0)
    }

    fn pivot(&mut self, entering: usize) {
        let (u, v) = (self.tail(entering), self.head(entering));
        let apex = {
            let (mut a, mut b) = (u, v);
            while a != b {
                if self.depth[a] >= self.depth[b] {
                    a = self.parent[a];
                } else {
                    b = self.parent[b];
                }
            }
            a
        };
        // Flow circulates apex → … → u → v → … → apex. On the v side an arc
        // is backward when it points from parent to child; on the u side when
        // it points from child to parent.
        let backward_on_v_side = |net: &Self, x: usize| net.tail(net.parent_arc[x]) != x;
        let backward_on_u_side = |net: &Self, x: usize| net.tail(net.parent_arc[x]) == x;

        let mut delta = u64::MAX;
        let mut x = v;
        while x != apex {
            if backward_on_v_side(self, x) {
                delta = delta.min(self.flow[self.parent_arc[x]]);
            }
            x = self.parent[x];
        }
        let mut x = u;
        while x != apex {
            if backward_on_u_side(self, x) {
                delta = delta.min(self.flow[self.parent_arc[x]]);
            }
            x = self.parent[x];
        }
        debug_assert!(delta != u64::MAX, "uncapacitated cycle with no backward arc");

        // last blocking arc in traversal order starting at the apex
        let mut leaving = NONE;
        let mut x = v;
        while x != apex {
            if backward_on_v_side(self, x) && self.flow[self.parent_arc[x]] == delta {
                leaving = self.parent_arc[x];
            }
            x = self.parent[x];
        }
        if leaving == NONE {
            let mut x = u;
            while x != apex {
                if backward_on_u_side(self, x) && self.flow[self.parent_arc[x]] == delta {
                    leaving = self.parent_arc[x];
                    break;
                }
                x = self.parent[x];
            }
        }

        if delta > 0 {
            let mut x = v;
            while x != apex {
                let e = self.parent_arc[x];
                if backward_on_v_side(self, x) {
                    self.flow[e] -= delta;
                } else {
                    self.flow[e] += delta;
                }
                x = self.parent[x];
            }
            let mut x = u;
            while x != apex {
                let e = self.parent_arc[x];
                if backward_on_u_side(self, x) {
                    self.flow[e] -= delta;
                } else {
                    self.flow[e] += delta;
                }
                x = self.parent[x];
            }
        }
        self.flow[entering] = delta;

        let (lt, lh) = (self.tail(leaving), self.head(leaving));
        self.in_tree[leaving] = false;
        for node in [lt, lh] {
            let pos = self.tree_adj[node]
                .iter()
                .position(|&e| e == leaving)
                .expect("leaving arc is in the tree");
            self.tree_adj[node].swap_remove(pos);
        }
        self.in_tree[entering] = true;
        self.tree_adj[u].push(entering);
        self.tree_adj[v].push(entering);
    }
}

/// Solves `min Σ c_ij x_ij` subject to row sums `supply`, column sums `demand`,
/// `x ≥ 0`. `cost` is row-major `supply.len() × demand.len()`.
pub fn solve_transport(
    supply: &[u64],
    demand: &[u64],
    cost: &[f64],
) -> Result<TransportPlan, TransportError> {
    let (m1, m2) = (supply.len(), demand.len());
    if cost.len() != m1 * m2 {
        return Err(TransportError::CostShape { expected: m1 * m2, found: cost.len() });
    }
    if cost.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(TransportError::BadCost);
    }
    if m1 == 0 || m2 == 0 || supply.iter().chain(demand).any(|&x| x == 0) {
        return Err(TransportError::ZeroMass);
    }
    let (total_s, total_d) = (supply.iter().sum::<u64>(), demand.iter().sum::<u64>());
    if total_s != total_d {
        return Err(TransportError::Unbalanced { supply: total_s, demand: total_d });
    }
    if m1 == 1 || m2 == 1 {
        return Ok(closed_form(supply, demand, cost));
    }

    let max_cost = cost.iter().fold(0.0_f64, |a, &b| a.max(b));
    let nodes = m1 + m2 + 1;
    let arcs = m1 * m2 + m1 + m2;
    let mut net = Network {
        sources: m1,
        sinks: m2,
        cost,
        big: (max_cost + 1.0) * nodes as f64,
        flow: vec![0; arcs],
        in_tree: vec![false; arcs],
        tree_adj: vec![Vec::new(); nodes],
        parent: vec![NONE; nodes],
        parent_arc: vec![NONE; nodes],
        depth: vec![0; nodes],
        potential: vec![0.0; nodes],
    };
    let root = net.root();
    for (i, &s) in supply.iter().enumerate() {
        let e = m1 * m2 + i;
        net.flow[e] = s;
        net.in_tree[e] = true;
        net.tree_adj[i].push(e);
        net.tree_adj[root].push(e);
    }
    for (j, &d) in demand.iter().enumerate() {
        let e = m1 * m2 + m1 + j;
        net.flow[e] = d;
        net.in_tree[e] = true;
        net.tree_adj[m1 + j].push(e);
        net.tree_adj[root].push(e);
    }

    let eps = 1e-12 * (1.0 + max_cost) * nodes as f64;
    let limit = 50 * arcs + 1000;
    let mut pivots = 0;
    loop {
        net.rebuild();
        let Some(entering) = net.entering_arc(eps) else { break };
        net.pivot(entering);
        pivots += 1;
        if pivots > limit {
            return Err(TransportError::NoConvergence(limit));
        }
    }
    log::trace!("transport {m1}x{m2} solved in {pivots} pivots");
    debug_assert!(net.flow[m1 * m2..].iter().all(|&f| f == 0));

    let mut flows = Vec::new();
    let mut total = 0.0;
    for i in 0..m1 {
        for j in 0..m2 {
            let f = net.flow[i * m2 + j];
            if f > 0 {
                flows.push((i, j, f));
                total += f as f64 * cost[i * m2 + j];
            }
        }
    }
    Ok(TransportPlan { flows, cost: total })
}

fn closed_form(supply: &[u64], demand: &[u64], cost: &[f64]) -> TransportPlan {
    let m2 = demand.len();
    let mut flows = Vec::new();
    let mut total = 0.0;
    if supply.len() == 1 {
        for (j, &d) in demand.iter().enumerate() {
            flows.push((0, j, d));
            total += d as f64 * cost[j];
        }
    } else {
        for (i, &s) in supply.iter().enumerate() {
            flows.push((i, 0, s));
            total += s as f64 * cost[i * m2];
        }
    }
    TransportPlan { flows, cost: total }
}
