//! The four-node motivating network and helpers for its perturbations.
//!
//! Nodes `a, b, c, d`; links `1 = (a,b)`, `2 = (a,c)`, `3 = (b,c)`,
//! `4 = (b,d)`, `5 = (c,d)` with capacities `2, 1, 1, 1, 3`; inflow 2 at `a`.
//! Its min-cut capacity is 3, attained by `{a}` and `{a, b}`.

use crate::graph::{Bound, LinkId, Network, NetworkBuilder};

pub const MOTIVATING_CAPACITIES: [f64; 5] = [2.0, 1.0, 1.0, 1.0, 3.0];
pub const MOTIVATING_INFLOW: f64 = 2.0;

pub fn motivating_network(buffer: Bound) -> Network {
    let c = MOTIVATING_CAPACITIES;
    NetworkBuilder::new()
        .node("a")
        .node("b")
        .node("c")
        .node("d")
        .link("1", "a", "b", Bound::Finite(c[0]), buffer)
        .link("2", "a", "c", Bound::Finite(c[1]), buffer)
        .link("3", "b", "c", Bound::Finite(c[2]), buffer)
        .link("4", "b", "d", Bound::Finite(c[3]), buffer)
        .link("5", "c", "d", Bound::Finite(c[4]), buffer)
        .inflow("a", MOTIVATING_INFLOW)
        .build()
        .expect("motivating network is well formed")
}

/// Link id of the motivating network's link named `n` (1-based).
pub fn link(n: usize) -> LinkId {
    assert!((1..=5).contains(&n));
    LinkId(n - 1)
}

/// Motivating network with the listed `(link number, capacity)` changes.
pub fn perturbed_motivating(buffer: Bound, changes: &[(usize, f64)]) -> Network {
    let base = motivating_network(buffer);
    let changes: alloc::vec::Vec<_> = changes.iter().map(|&(n, c)| (link(n), c)).collect();
    base.with_capacities(&changes).expect("perturbation within nominal capacities")
}
