//! Max-flow (Edmonds–Karp) reduction of the cut problem.
//!
//! Source `s` feeds every node `v` with capacity `lambda_v`, links keep
//! their capacities and destinations drain into the sink `t` without limit.
//! A minimum `s`-`t` cut `{s} ∪ U` costs `lambda_total - (lambda_U - C_U)`,
//! so the source sides of minimum cuts are the maximizers of the violation,
//! with the empty set included.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{combine_maximal, tolerance, CutError, CutReport};
use crate::graph::{cut_violation, Bound, Cut, Network, NodeId};

struct FlowGraph {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    residual: Vec<f64>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph { adj: vec![Vec::new(); n], to: Vec::new(), residual: Vec::new() }
    }

    fn add(&mut self, u: usize, v: usize, cap: f64) {
        self.adj[u].push(self.to.len());
        self.to.push(v);
        self.residual.push(cap);
        self.adj[v].push(self.to.len());
        self.to.push(u);
        self.residual.push(0.0);
    }

    fn max_flow(&mut self, s: usize, t: usize, eps: f64) {
        let n = self.adj.len();
        let mut pred = vec![usize::MAX; n];
        loop {
            pred.iter_mut().for_each(|p| *p = usize::MAX);
            let mut queue = VecDeque::from([s]);
            pred[s] = usize::MAX - 1;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &a in &self.adj[u] {
                    let v = self.to[a];
                    if pred[v] == usize::MAX && self.residual[a] > eps {
                        pred[v] = a;
                        queue.push_back(v);
                    }
                }
            }
            if pred[t] == usize::MAX {
                return;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = t;
            while v != s {
                let a = pred[v];
                bottleneck = bottleneck.min(self.residual[a]);
                v = self.to[a ^ 1];
            }
            let mut v = t;
            while v != s {
                let a = pred[v];
                self.residual[a] -= bottleneck;
                self.residual[a ^ 1] += bottleneck;
                v = self.to[a ^ 1];
            }
        }
    }

    /// Nodes from which `t` is reachable in the residual graph.
    fn reaching(&self, t: usize, eps: f64) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            // residual arc u -> v is the reverse of an arc stored at v
            for &a in &self.adj[v] {
                let u = self.to[a];
                if !seen[u] && self.residual[a ^ 1] > eps {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }
}

fn big_m(network: &Network) -> Result<f64, CutError> {
    let finite: f64 = network.links().iter().filter_map(|l| l.capacity.finite()).sum();
    let m = network.total_inflow() + finite + 1.0;
    if m.is_finite() {
        Ok(m)
    } else {
        Err(CutError::Overflow)
    }
}

/// Source supply per node: inflow, or big-M for forced nodes.
fn solve(network: &Network, supply: &[f64], big: f64) -> Cut {
    let n = network.node_count();
    let (s, t) = (n, n + 1);
    let mut g = FlowGraph::new(n + 2);
    for v in network.nodes() {
        if supply[v.0] > 0.0 && !network.is_destination(v) {
            g.add(s, v.0, supply[v.0]);
        }
        if network.is_destination(v) {
            g.add(v.0, t, big);
        }
    }
    for l in network.links() {
        let c = match l.capacity {
            Bound::Finite(c) => c,
            Bound::Unbounded => big,
        };
        g.add(l.tail.0, l.head.0, c);
    }
    let eps = 64.0 * f64::EPSILON * big;
    g.max_flow(s, t, eps);
    // largest minimum cut: everything that cannot reach t
    let reaching = g.reaching(t, eps);
    let members = (0..n).map(|v| !reaching[v] && !network.is_destination(NodeId(v))).collect();
    Cut::from_mask(members)
}

/// `max_U (lambda_U - C_U)` over non-empty cuts by max-flow, with `U*`.
///
/// Only `U*` is returned as a maximizer. When the empty set is the only
/// minimizer of the flow problem (no cut is violating or tight), one forced
/// max-flow per node recovers the largest best cut containing that node.
pub fn maxflow_report(network: &Network) -> Result<CutReport, CutError> {
    if network.non_destinations().is_empty() {
        return Err(CutError::NoCandidate);
    }
    let big = big_m(network)?;
    let inflow = network.inflows().to_vec();
    let largest = solve(network, &inflow, big);
    let (best, u_star) = if !largest.is_empty() {
        (cut_violation(network, &largest), largest)
    } else {
        let per_node: Vec<(f64, Cut)> = network
            .non_destinations()
            .into_iter()
            .map(|v| {
                let mut supply = inflow.clone();
                supply[v.0] = big;
                let cut = solve(network, &supply, big);
                (cut_violation(network, &cut), cut)
            })
            .collect();
        let best = per_node.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let floor = best - tolerance(best);
        let mut maximal: Vec<Cut> = Vec::new();
        for (value, cut) in per_node {
            if value >= floor && !maximal.contains(&cut) {
                maximal.push(cut);
            }
        }
        (best, combine_maximal(best, maximal))
    };
    Ok(CutReport {
        best_value: best,
        maximizers: vec![u_star.clone()],
        maximizers_complete: false,
        u_star,
        records: Vec::new(),
    })
}

/// `max_U (lambda_U - C_U)` over non-empty cuts, by max-flow.
pub fn max_violation_maxflow(network: &Network) -> Result<f64, CutError> {
    maxflow_report(network).map(|r| r.best_value)
}

/// Min-cut capacity `C_G`: the smallest `C_U` over cuts containing every
/// origin, that is, the largest total inflow the network can carry from its
/// origins.
pub fn min_cut_capacity(network: &Network) -> Result<f64, CutError> {
    let big = big_m(network)?;
    let origins = network.origins();
    if origins.is_empty() {
        return Err(CutError::NoCandidate);
    }
    let mut supply = vec![0.0; network.node_count()];
    for v in &origins {
        supply[v.0] = big;
    }
    let cut = solve(network, &supply, big);
    Ok(crate::graph::cut_capacity(network, &cut).as_f64())
}
