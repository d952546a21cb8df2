//! Empirical resilience: the smallest capacity reduction, within a family of
//! perturbations, that costs more than `delta` of throughput.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use super::AnalysisError;
use crate::cuts::{min_cut_capacity, CutError};
use crate::dynamics::{self, IntegrationConfig, Termination};
use crate::graph::{Bound, LinkId, Network};
use crate::routing::RoutingPolicy;

/// A one-parameter family of capacity reductions, indexed by the total
/// capacity removed.
#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationFamily {
    /// Drain the listed links in order: the first down to zero, then the
    /// next.
    Sequential(Vec<LinkId>),
    /// Scale every finite capacity by the same factor.
    Uniform,
}

impl PerturbationFamily {
    /// Largest reduction the family can express.
    pub fn max_reduction(&self, network: &Network) -> f64 {
        match self {
            PerturbationFamily::Sequential(links) => links.iter().filter_map(|e| network.capacity(*e).finite()).sum(),
            PerturbationFamily::Uniform => network.links().iter().filter_map(|l| l.capacity.finite()).sum(),
        }
    }

    /// The network with `amount` of capacity removed.
    pub fn apply(&self, network: &Network, amount: f64) -> Result<Network, AnalysisError> {
        let amount = amount.clamp(0.0, self.max_reduction(network));
        let changes: Vec<(LinkId, f64)> = match self {
            PerturbationFamily::Sequential(links) => {
                let mut left = amount;
                let mut changes = Vec::new();
                for &e in links {
                    if let Bound::Finite(c) = network.capacity(e) {
                        let cut = left.min(c);
                        left -= cut;
                        changes.push((e, (c - cut).max(0.0)));
                    }
                }
                changes
            }
            PerturbationFamily::Uniform => {
                let total = self.max_reduction(network);
                let keep = if total > 0.0 { 1.0 - amount / total } else { 1.0 };
                network
                    .links()
                    .iter()
                    .enumerate()
                    .filter_map(|(i, l)| l.capacity.finite().map(|c| (LinkId(i), c * keep)))
                    .collect()
            }
        };
        network
            .with_capacities(&changes)
            .map_err(|e| AnalysisError::InvalidConfig(format!("{e}")))
    }

    pub fn describe(&self, network: &Network) -> String {
        match self {
            PerturbationFamily::Sequential(links) => {
                let names: Vec<&str> = links.iter().map(|e| network.link_name(*e)).collect();
                format!("sequential({})", names.join(","))
            }
            PerturbationFamily::Uniform => String::from("uniform"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResilienceConfig {
    /// Used for every run; `t_max` is replaced by `t0 + horizon`.
    pub integration: IntegrationConfig,
    pub horizon: f64,
    /// Averaging window for the throughput of runs that do not settle.
    pub window: f64,
    /// Extra throughput loss required before a run counts as reduced;
    /// `None` means `5e-3 * total inflow`.
    pub loss_tol: Option<f64>,
    /// Bisection stops when the bracket is this narrow.
    pub resolution: f64,
}

impl Default for ResilienceConfig {
    fn default() -> Self {
        ResilienceConfig {
            integration: IntegrationConfig::default(),
            horizon: 2000.0,
            window: 1000.0,
            loss_tol: None,
            resolution: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResiliencePoint {
    pub delta: f64,
    /// `None` when even the largest reduction of the family keeps the loss
    /// within `delta`.
    pub nu_hat: Option<f64>,
    /// `C_G - lambda + delta`.
    pub nu_theory: f64,
    pub runs: usize,
    /// Reductions whose run failed; they were counted as not reduced.
    pub flagged: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResilienceCurve {
    pub family: String,
    pub min_cut_capacity: f64,
    pub points: Vec<ResiliencePoint>,
}

/// Shared state of a resilience sweep: the unperturbed equilibrium every
/// run starts from, and the min-cut capacity.
pub struct Resilience<'a, P: ?Sized> {
    network: &'a Network,
    policy: &'a P,
    family: PerturbationFamily,
    cfg: ResilienceConfig,
    start: Vec<f64>,
    min_cut: f64,
}

enum Outcome {
    Reduced,
    Kept,
    Failed,
}

impl<'a, P: RoutingPolicy + ?Sized> Resilience<'a, P> {
    pub fn new(
        network: &'a Network,
        policy: &'a P,
        family: PerturbationFamily,
        cfg: ResilienceConfig,
    ) -> Result<Self, AnalysisError> {
        if !(cfg.resolution > 0.0) || !(cfg.horizon > 0.0) || !(cfg.window > 0.0) || cfg.window > cfg.horizon {
            return Err(AnalysisError::InvalidConfig(String::from(
                "resolution, horizon and window must be positive, window at most horizon",
            )));
        }
        if let PerturbationFamily::Sequential(links) = &family {
            if links.is_empty() || links.iter().any(|e| e.0 >= network.link_count()) {
                return Err(AnalysisError::InvalidConfig(String::from(
                    "perturbation family must list existing links",
                )));
            }
        }
        let min_cut = match min_cut_capacity(network) {
            Ok(c) => c,
            Err(CutError::NoCandidate) => 0.0,
            Err(e) => return Err(e.into()),
        };
        let mut int = cfg.integration.clone();
        int.t_max = int.t0 + cfg.horizon;
        int.stop_at_equilibrium = true;
        let zero = vec![0.0; network.link_count()];
        let traj = dynamics::integrate(network, policy, &zero, &int)?;
        let start = traj.final_state().to_vec();
        Ok(Resilience { network, policy, family, cfg, start, min_cut })
    }

    pub fn min_cut_capacity(&self) -> f64 {
        self.min_cut
    }

    /// State every perturbed run starts from.
    pub fn start_state(&self) -> &[f64] {
        &self.start
    }

    fn loss_tol(&self) -> f64 {
        self.cfg.loss_tol.unwrap_or(5e-3 * self.network.total_inflow())
    }

    /// Long-run throughput after removing `amount` of capacity.
    pub fn throughput(&self, amount: f64) -> Result<f64, AnalysisError> {
        let perturbed = self.family.apply(self.network, amount)?;
        let mut int = self.cfg.integration.clone();
        int.t_max = int.t0 + self.cfg.horizon;
        int.stop_at_equilibrium = true;
        let traj = dynamics::integrate(&perturbed, self.policy, &self.start, &int)?;
        Ok(match traj.termination {
            Termination::ReachedTMax => dynamics::throughput(&traj, &perturbed, self.cfg.window)
                .map_err(|e| AnalysisError::InvalidConfig(format!("{e}")))?,
            // a buffer hit ends the run: the network loses its inflow
            Termination::BufferHit { .. } => f64::NEG_INFINITY,
            Termination::EquilibriumDetected { .. } => {
                traj.destination_outflow(&perturbed).last().copied().unwrap_or(0.0)
            }
        })
    }

    fn outcome(&self, amount: f64, delta: f64) -> Outcome {
        match self.throughput(amount) {
            Ok(mu) if mu < self.network.total_inflow() - delta - self.loss_tol() => Outcome::Reduced,
            Ok(_) => Outcome::Kept,
            Err(_) => Outcome::Failed,
        }
    }

    /// `nu_hat(delta)` by bisection on the reduction.
    pub fn point(&self, delta: f64) -> ResiliencePoint {
        let nu_theory = self.min_cut - self.network.total_inflow() + delta;
        let mut runs = 0;
        let mut flagged = Vec::new();
        let mut reduced = |amount: f64| {
            runs += 1;
            match self.outcome(amount, delta) {
                Outcome::Reduced => true,
                Outcome::Kept => false,
                Outcome::Failed => {
                    flagged.push(amount);
                    false
                }
            }
        };
        let max = self.family.max_reduction(self.network);
        let nu_hat = if reduced(0.0) {
            Some(0.0)
        } else if !reduced(max) {
            None
        } else {
            let (mut lo, mut hi) = (0.0, max);
            while hi - lo > self.cfg.resolution {
                let mid = 0.5 * (lo + hi);
                if reduced(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        };
        ResiliencePoint { delta, nu_hat, nu_theory, runs, flagged }
    }

    pub fn family(&self) -> &PerturbationFamily {
        &self.family
    }
}

/// `nu_hat` on every `delta` of `deltas`, one after the other.
pub fn resilience_curve<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    family: PerturbationFamily,
    deltas: &[f64],
    cfg: &ResilienceConfig,
) -> Result<ResilienceCurve, AnalysisError> {
    let r = Resilience::new(network, policy, family, cfg.clone())?;
    let points = deltas.iter().map(|&d| r.point(d)).collect();
    Ok(ResilienceCurve { family: r.family.describe(network), min_cut_capacity: r.min_cut, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{link, motivating_network};
    use crate::routing::{MotivatingPolicy, RoutingMatrix};

    #[test]
    fn sequential_family_drains_in_order() {
        let net = motivating_network(Bound::Unbounded);
        let f = PerturbationFamily::Sequential(vec![link(3), link(4)]);
        assert_eq!(f.max_reduction(&net), 2.0);
        let p = f.apply(&net, 1.25).unwrap();
        assert_eq!(p.capacity(link(3)), Bound::Finite(0.0));
        assert_eq!(p.capacity(link(4)), Bound::Finite(0.75));
        assert_eq!(p.capacity(link(1)), Bound::Finite(2.0));
    }

    #[test]
    fn uniform_family_scales() {
        let net = motivating_network(Bound::Unbounded);
        let f = PerturbationFamily::Uniform;
        assert_eq!(f.max_reduction(&net), 8.0);
        let p = f.apply(&net, 2.0).unwrap();
        assert!((p.capacity(link(5)).as_f64() - 2.25).abs() < 1e-15);
    }

    #[test]
    fn flow_control_resilience_at_zero_loss() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let cfg = ResilienceConfig { resolution: 1e-2, ..ResilienceConfig::default() };
        let r = Resilience::new(&net, &p, PerturbationFamily::Sequential(vec![link(3), link(4)]), cfg).unwrap();
        assert_eq!(r.min_cut_capacity(), 3.0);
        let pt = r.point(0.0);
        assert!((pt.nu_theory - 1.0).abs() < 1e-15);
        let nu = pt.nu_hat.unwrap();
        assert!((nu - 1.0).abs() < 0.05, "{pt:?}");
        assert!(pt.flagged.is_empty());
    }

    #[test]
    fn bad_family() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::Fixed).unwrap();
        let f = PerturbationFamily::Sequential(vec![]);
        assert!(Resilience::new(&net, &p, f, ResilienceConfig::default()).is_err());
    }
}
