//! Cut violations `max_U (lambda_U - C_U)` over non-empty sets `U` of
//! non-destination nodes, the maximizing family `M` and its union `U*`.
//!
//! Two independent engines: exhaustive enumeration (exact, all maximizers)
//! and a max-flow reduction that scales to larger networks.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::graph::{cut_violation, Bound, Cut, Network, NodeId};

mod maxflow;

pub use maxflow::{max_violation_maxflow, maxflow_report, min_cut_capacity};

pub const DEFAULT_ENUMERATION_LIMIT: usize = 22;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CutError {
    #[error("{nodes} non-destination nodes exceed the enumeration limit of {limit}; use the max-flow engine")]
    TooManyNodes { nodes: usize, limit: usize },
    #[error("the network has no non-destination node")]
    NoCandidate,
    #[error("capacities and inflows do not fit a finite big-M")]
    Overflow,
}

/// Two cut values are equal when they differ by at most this much.
pub fn tolerance(best: f64) -> f64 {
    1e-9 * (1.0 + best.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutRecord {
    pub cut: Cut,
    pub inflow: f64,
    pub capacity: Bound,
    /// `lambda_U - C_U`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutReport {
    pub best_value: f64,
    pub maximizers: Vec<Cut>,
    /// False when only some maximizers are known (max-flow engine).
    pub maximizers_complete: bool,
    /// The union of all maximizers when `best_value >= 0`, which is then a
    /// maximizer itself. Below zero disjoint maximizers need not combine, and
    /// this is the largest inclusion-maximal maximizer instead.
    pub u_star: Cut,
    /// Every non-empty cut, when requested from the enumeration engine.
    pub records: Vec<CutRecord>,
}

impl CutReport {
    /// `lambda_U > C_U` for some cut, beyond the equality tolerance.
    pub fn is_violating(&self) -> bool {
        self.best_value > tolerance(self.best_value)
    }

    /// `max_U (lambda_U - C_U) = 0` within the equality tolerance.
    pub fn is_critical(&self) -> bool {
        self.best_value.abs() <= tolerance(self.best_value)
    }
}

#[derive(Clone, Debug)]
pub struct CutConfig {
    pub enumeration_limit: usize,
    pub keep_records: bool,
}

impl Default for CutConfig {
    fn default() -> Self {
        CutConfig { enumeration_limit: DEFAULT_ENUMERATION_LIMIT, keep_records: false }
    }
}

/// Exhaustive scan over subsets of `V \ D`, encoded as bit masks.
///
/// Ranges of masks can be scanned independently (for instance on several
/// threads) and merged with [`Enumerator::finish`]; the result does not
/// depend on how the range was split.
pub struct Enumerator<'a> {
    network: &'a Network,
    candidates: Vec<NodeId>,
    /// Per link: bit of its tail and of its head (0 for destinations).
    link_bits: Vec<(u64, u64, f64)>,
    node_inflow: Vec<f64>,
}

/// Result of scanning one range of masks.
#[derive(Clone, Debug, Default)]
pub struct Partial {
    best: f64,
    maximizers: Vec<(u64, f64)>,
    records: Vec<(u64, f64, f64)>,
}

impl<'a> Enumerator<'a> {
    pub fn new(network: &'a Network, limit: usize) -> Result<Self, CutError> {
        let candidates = network.non_destinations();
        if candidates.is_empty() {
            return Err(CutError::NoCandidate);
        }
        if candidates.len() > limit || candidates.len() > 62 {
            return Err(CutError::TooManyNodes { nodes: candidates.len(), limit: limit.min(62) });
        }
        let mut bit = vec![0u64; network.node_count()];
        for (i, v) in candidates.iter().enumerate() {
            bit[v.0] = 1 << i;
        }
        let link_bits = network
            .links()
            .iter()
            .map(|l| (bit[l.tail.0], bit[l.head.0], l.capacity.as_f64()))
            .collect();
        let node_inflow = candidates.iter().map(|&v| network.inflow(v)).collect();
        Ok(Enumerator { network, candidates, link_bits, node_inflow })
    }

    /// Masks `1 .. mask_end()` are the non-empty cuts.
    pub fn mask_end(&self) -> u64 {
        1u64 << self.candidates.len()
    }

    fn evaluate(&self, mask: u64) -> (f64, f64) {
        let mut inflow = 0.0;
        for (i, l) in self.node_inflow.iter().enumerate() {
            if mask & (1 << i) != 0 {
                inflow += l;
            }
        }
        let mut capacity = 0.0;
        for &(t, h, c) in &self.link_bits {
            if mask & t != 0 && mask & h == 0 {
                capacity += c;
            }
        }
        (inflow, capacity)
    }

    pub fn scan(&self, masks: Range<u64>, keep_records: bool) -> Partial {
        let mut p = Partial { best: f64::NEG_INFINITY, maximizers: Vec::new(), records: Vec::new() };
        for mask in masks.start.max(1)..masks.end.min(self.mask_end()) {
            let (inflow, capacity) = self.evaluate(mask);
            let value = inflow - capacity;
            if keep_records {
                p.records.push((mask, inflow, capacity));
            }
            p.offer(mask, value);
        }
        p
    }

    pub fn cut(&self, mask: u64) -> Cut {
        let mut members = vec![false; self.network.node_count()];
        for (i, v) in self.candidates.iter().enumerate() {
            if mask & (1 << i) != 0 {
                members[v.0] = true;
            }
        }
        Cut::from_mask(members)
    }

    pub fn finish<I: IntoIterator<Item = Partial>>(&self, partials: I) -> CutReport {
        let mut all = Partial { best: f64::NEG_INFINITY, maximizers: Vec::new(), records: Vec::new() };
        for p in partials {
            for &(m, v) in &p.maximizers {
                all.offer(m, v);
            }
            all.records.extend(p.records);
        }
        all.maximizers.sort_unstable_by_key(|x| x.0);
        all.records.sort_unstable_by_key(|r| r.0);
        let maximal: Vec<Cut> = all
            .maximizers
            .iter()
            .filter(|&&(m, _)| !all.maximizers.iter().any(|&(o, _)| o != m && o & m == m))
            .map(|&(m, _)| self.cut(m))
            .collect();
        let maximizers = all.maximizers.iter().map(|&(m, _)| self.cut(m)).collect();
        let records = all
            .records
            .iter()
            .map(|&(m, inflow, capacity)| CutRecord {
                cut: self.cut(m),
                inflow,
                capacity: if capacity.is_finite() { Bound::Finite(capacity) } else { Bound::Unbounded },
                value: inflow - capacity,
            })
            .collect();
        CutReport {
            best_value: all.best,
            maximizers,
            maximizers_complete: true,
            u_star: combine_maximal(all.best, maximal),
            records,
        }
    }
}

/// `U*` from the inclusion-maximal maximizers.
pub(crate) fn combine_maximal(best: f64, mut maximal: Vec<Cut>) -> Cut {
    if best >= -tolerance(best) {
        return maximal
            .into_iter()
            .reduce(|a, b| a.union(&b))
            .expect("at least one maximizer");
    }
    maximal.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.nodes().cmp(&b.nodes())));
    maximal.swap_remove(0)
}

impl Partial {
    fn offer(&mut self, mask: u64, value: f64) {
        if value > self.best {
            self.best = value;
            let floor = value - tolerance(value);
            self.maximizers.retain(|&(_, v)| v >= floor);
        }
        if value >= self.best - tolerance(self.best) {
            self.maximizers.push((mask, value));
        }
    }
}

/// Exact `max_U (lambda_U - C_U)` with every maximizer, by enumeration.
pub fn enumerate_violations(network: &Network, cfg: &CutConfig) -> Result<CutReport, CutError> {
    let e = Enumerator::new(network, cfg.enumeration_limit)?;
    let p = e.scan(1..e.mask_end(), cfg.keep_records);
    Ok(e.finish([p]))
}

/// Cuts with `lambda_U > C_U`, by enumeration.
pub fn violating_cuts(network: &Network, cfg: &CutConfig) -> Result<Vec<CutRecord>, CutError> {
    let report = enumerate_violations(network, &CutConfig { keep_records: true, ..cfg.clone() })?;
    Ok(report.records.into_iter().filter(|r| r.value > 0.0).collect())
}

/// The maximal maximizing cut.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalCut {
    pub cut: Cut,
    pub value: f64,
    /// `lambda_U* - C_U* >= 0`: the cut is violating or tight.
    pub violating: bool,
    /// Whether enumeration (rather than max-flow) produced the cut.
    pub enumerated: bool,
}

/// `U*`, by enumeration when the network is small enough and by max-flow
/// otherwise.
pub fn maximal_cut(network: &Network, cfg: &CutConfig) -> Result<MaximalCut, CutError> {
    let (report, enumerated) = match enumerate_violations(network, cfg) {
        Ok(r) => (r, true),
        Err(CutError::TooManyNodes { .. }) => (maxflow_report(network)?, false),
        Err(e) => return Err(e),
    };
    let value = cut_violation(network, &report.u_star);
    debug_assert!((value - report.best_value).abs() <= tolerance(report.best_value) || value == report.best_value);
    Ok(MaximalCut {
        violating: report.best_value >= -tolerance(report.best_value),
        cut: report.u_star,
        value,
        enumerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{motivating_network, perturbed_motivating};
    use crate::graph::{cut_capacity, cut_inflow, NetworkBuilder};

    fn names(net: &Network, cut: &Cut) -> Vec<alloc::string::String> {
        cut.names(net)
    }

    #[test]
    fn motivating_network_min_cut() {
        let net = motivating_network(Bound::Unbounded);
        let r = enumerate_violations(&net, &CutConfig::default()).unwrap();
        assert_eq!(r.best_value, -1.0);
        let ms: Vec<_> = r.maximizers.iter().map(|c| names(&net, c)).collect();
        assert_eq!(ms, [vec!["a"], vec!["a", "b"]]);
        assert_eq!(names(&net, &r.u_star), ["a", "b"]);
        assert!(!r.is_violating() && !r.is_critical());
        assert_eq!(max_violation_maxflow(&net).unwrap(), -1.0);
        assert_eq!(min_cut_capacity(&net).unwrap(), 3.0);
    }

    #[test]
    fn perturbed_link_three() {
        let net = perturbed_motivating(Bound::Unbounded, &[(3, 0.0)]);
        let r = enumerate_violations(&net, &CutConfig::default()).unwrap();
        assert_eq!(r.best_value, 0.0);
        assert!(r.is_critical());
        assert_eq!(names(&net, &r.u_star), ["a", "b"]);
        assert_eq!(max_violation_maxflow(&net).unwrap(), 0.0);
        let mf = maxflow_report(&net).unwrap();
        assert_eq!(names(&net, &mf.u_star), ["a", "b"]);

        let net = perturbed_motivating(Bound::Unbounded, &[(3, 1.0 / 6.0)]);
        assert!((min_cut_capacity(&net).unwrap() - 13.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn overloaded_cut() {
        let net = perturbed_motivating(Bound::Unbounded, &[(3, 0.0), (4, 0.0)]);
        let r = enumerate_violations(&net, &CutConfig::default()).unwrap();
        assert_eq!(r.best_value, 1.0);
        assert_eq!(names(&net, &r.u_star), ["a", "b"]);
        let m = maximal_cut(&net, &CutConfig::default()).unwrap();
        assert!(m.violating && m.enumerated && m.value == 1.0);
        let mf = maxflow_report(&net).unwrap();
        assert_eq!(mf.best_value, 1.0);
        assert_eq!(mf.u_star, r.u_star);
    }

    #[test]
    fn zero_inflow() {
        let net = motivating_network(Bound::Unbounded).with_inflows(vec![0.0; 4]);
        let r = enumerate_violations(&net, &CutConfig::default()).unwrap();
        // min over U of C_U is C_b = C3 + C4 = 2
        assert_eq!(r.best_value, -2.0);
        assert_eq!(names(&net, &r.u_star), ["b"]);
        assert_eq!(max_violation_maxflow(&net).unwrap(), -2.0);
        assert_eq!(maxflow_report(&net).unwrap().u_star, r.u_star);
    }

    #[test]
    fn single_link() {
        let net = NetworkBuilder::new()
            .link("e", "o", "d", Bound::Finite(1.25), Bound::Unbounded)
            .inflow("o", 3.0)
            .build()
            .unwrap();
        assert_eq!(max_violation_maxflow(&net).unwrap(), 3.0 - 1.25);
        assert_eq!(enumerate_violations(&net, &CutConfig::default()).unwrap().best_value, 1.75);
    }

    #[test]
    fn disjoint_maximizers_union() {
        // o1 -> d and o2 -> d, both violating by 1
        let net = NetworkBuilder::new()
            .link("1", "o1", "d", Bound::Finite(1.0), Bound::Unbounded)
            .link("2", "o2", "d", Bound::Finite(2.0), Bound::Unbounded)
            .inflow("o1", 2.0)
            .inflow("o2", 3.0)
            .build()
            .unwrap();
        let r = enumerate_violations(&net, &CutConfig::default()).unwrap();
        assert_eq!(r.best_value, 2.0);
        assert_eq!(r.maximizers.len(), 1);
        assert_eq!(names(&net, &r.u_star), ["o1", "o2"]);
        // both tight: the union is tight as well
        let net = net.with_inflows(vec![1.0, 0.0, 2.0]);
        let r = enumerate_violations(&net, &CutConfig::default()).unwrap();
        assert_eq!(r.best_value, 0.0);
        assert_eq!(r.maximizers.len(), 3);
        assert_eq!(names(&net, &r.u_star), ["o1", "o2"]);
        assert_eq!(cut_violation(&net, &r.u_star), 0.0);
        assert_eq!(maxflow_report(&net).unwrap().u_star, r.u_star);
    }

    #[test]
    fn records_and_violating_cuts() {
        let net = perturbed_motivating(Bound::Finite(1.0), &[(3, 0.0), (4, 0.5)]);
        let r = enumerate_violations(&net, &CutConfig { keep_records: true, ..Default::default() }).unwrap();
        assert_eq!(r.records.len(), 7);
        for rec in &r.records {
            assert_eq!(rec.inflow, cut_inflow(&net, &rec.cut));
            assert_eq!(rec.capacity, cut_capacity(&net, &rec.cut));
        }
        let v = violating_cuts(&net, &CutConfig::default()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(names(&net, &v[0].cut), ["a", "b"]);
        assert_eq!(v[0].value, 0.5);
    }

    #[test]
    fn split_scans_agree() {
        let net = perturbed_motivating(Bound::Unbounded, &[(3, 0.0)]);
        let e = Enumerator::new(&net, 22).unwrap();
        let whole = e.finish([e.scan(1..e.mask_end(), false)]);
        let parts = e.finish([e.scan(5..8, false), e.scan(0..3, false), e.scan(3..5, false)]);
        assert_eq!(whole, parts);
    }

    #[test]
    fn limit_is_enforced() {
        let net = motivating_network(Bound::Unbounded);
        let err = enumerate_violations(&net, &CutConfig { enumeration_limit: 2, ..Default::default() });
        assert_eq!(err.unwrap_err(), CutError::TooManyNodes { nodes: 3, limit: 2 });
        let m = maximal_cut(&net, &CutConfig { enumeration_limit: 2, ..Default::default() }).unwrap();
        assert!(!m.enumerated);
        assert_eq!(names(&net, &m.cut), ["a", "b"]);
    }
}
