//! Single-commodity dynamical flow networks under monotone distributed routing.
//!
//! A network is a directed multigraph whose links carry a density `rho_e`,
//! evolving by mass conservation `d/dt rho_e = f_in_e - f_out_e`. The flow
//! from a link to each of its downstream links is decided by a distributed
//! routing policy that only sees the densities around the link. This crate
//! provides:
//!
//! - [`graph`]: networks, the augmented network with the external world node,
//!   cuts and their capacities.
//! - [`routing`]: the routing-policy interface, the softmax policy, the
//!   fixed/locally-responsive/back-propagating policies of the four-node
//!   motivating network, and sampled axiom and monotonicity checkers.
//! - [`dynamics`]: right-hand side evaluation and an adaptive Dormand–Prince
//!   integrator with buffer-hit and equilibrium detection.
//! - [`cuts`]: exhaustive and max-flow based computation of
//!   `max_U (lambda_U - C_U)` and the maximal maximizing cut.
//! - [`analysis`]: stability/overload verdicts, link classification, the
//!   finite-buffer hitting-time bound, growth rates and resilience curves.
//! - [`properties`]: l1-contraction, order-preservation and sign-inequality
//!   property checks over seeded random instances.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, IO and the CLI
//! live in the `flownet` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod cuts;
pub mod dynamics;
pub mod fixtures;
pub mod graph;
mod math;
pub mod properties;
pub mod routing;

pub use graph::{Bound, Cut, LinkId, Network, NetworkBuilder, NodeId};
pub use routing::RoutingPolicy;
