//! Distributed routing policies.
//!
//! A policy maps the local density vector of a sender (its own density and
//! the densities of its downstream links) to the flow sent to each
//! downstream target. Policies never see anything else, which is what makes
//! them distributed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{LinkId, Network, Source, Target};

mod checks;
mod motivating;
mod softmax;

pub use checks::{
    check_axioms, check_monotonicity, Axiom, AxiomCheck, AxiomReport, AxiomResult, MonotonicityCheck,
    MonotonicityClass, MonotonicityReport, MonotonicityViolation, Partial,
};
pub use motivating::{MotivatingPolicy, RoutingMatrix};
pub use softmax::SoftmaxPolicy;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PolicyError {
    /// Every density around the sender is at its buffer: the point excluded
    /// from the policy domain.
    #[error("{0:?}: all local densities at their buffers")]
    ExcludedPoint(Source),
    #[error("density {value} of link {link:?} outside [0, buffer]")]
    OutOfRange { link: LinkId, value: f64 },
    #[error("link {0:?} has unbounded capacity; the policy needs finite capacities")]
    UnboundedCapacity(LinkId),
    #[error("network does not match the policy topology: {0}")]
    TopologyMismatch(String),
    #[error("invalid policy parameter: {0}")]
    BadParameter(String),
}

/// The local density vector `rho^e` of a sender.
#[derive(Clone, Copy, Debug)]
pub struct LocalDensity<'a> {
    pub source: Source,
    /// Own density; `None` for origin links, which carry no density.
    pub own: Option<f64>,
    /// Downstream targets in link-id order.
    pub targets: &'a [Target],
    /// Densities of the downstream links, aligned with `targets`. Empty when
    /// the only target is [`Target::Exit`].
    pub downstream: &'a [f64],
}

impl<'a> LocalDensity<'a> {
    /// Collects the local view of `source` from a full density vector.
    pub fn gather(
        network: &'a Network,
        source: Source,
        rho: &[f64],
        scratch: &'a mut Vec<f64>,
    ) -> LocalDensity<'a> {
        let targets = network.targets(source);
        scratch.clear();
        for t in targets {
            if let Target::Link(k) = t {
                scratch.push(rho[k.0]);
            }
        }
        let own = match source {
            Source::Link(e) => Some(rho[e.0]),
            Source::Origin(_) => None,
        };
        LocalDensity { source, own, targets, downstream: scratch }
    }

    pub fn exits(&self) -> bool {
        matches!(self.targets, [Target::Exit])
    }
}

/// Flows `f_{e->j}` from one sender to each downstream target.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSplit {
    pub flows: Vec<f64>,
}

impl FlowSplit {
    /// Total outflow `f_out_e`.
    pub fn total(&self) -> f64 {
        self.flows.iter().sum()
    }
}

/// A distributed routing policy.
///
/// Implementations must be pure functions of the network parameters and the
/// local density, so evaluators can be shared across threads.
pub trait RoutingPolicy: Send + Sync {
    /// Writes the flow to each of `local.targets` into `out`.
    fn write_split(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) -> Result<(), PolicyError>;

    fn name(&self) -> String {
        String::from("custom")
    }

    fn split(&self, network: &Network, local: &LocalDensity<'_>) -> Result<FlowSplit, PolicyError> {
        let mut flows = alloc::vec![0.0; local.targets.len()];
        self.write_split(network, local, &mut flows)?;
        Ok(FlowSplit { flows })
    }
}

impl<P: RoutingPolicy + ?Sized> RoutingPolicy for &P {
    fn write_split(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) -> Result<(), PolicyError> {
        (**self).write_split(network, local, out)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

impl<P: RoutingPolicy + ?Sized> RoutingPolicy for alloc::boxed::Box<P> {
    fn write_split(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) -> Result<(), PolicyError> {
        (**self).write_split(network, local, out)
    }

    fn name(&self) -> String {
        (**self).name()
    }
}
