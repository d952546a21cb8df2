use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{LocalDensity, PolicyError, RoutingPolicy};
use crate::graph::{Bound, LinkId, Network, Source};
use crate::math;

/// Softmax routing with congestion cost `phi_e(rho) = beta_e rho / (B_e - rho)`
/// (or `beta_e rho` for unbounded buffers).
///
/// With `gamma_i = exp(-phi_i(rho_i))` and `Z` the sum of `gamma` over the
/// sender and its downstream links, a link sends `C_e (1 - gamma_e) gamma_j / Z`
/// to downstream link `j`, a link entering a destination discharges
/// `C_e (1 - gamma_e)`, and an origin splits its inflow as `lambda_v gamma_j / Z`
/// (with `Z` over the downstream links only). This policy is strongly
/// monotone.
#[derive(Clone, Debug)]
pub struct SoftmaxPolicy {
    beta: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn new(network: &Network, beta: Vec<f64>) -> Result<Self, PolicyError> {
        if beta.len() != network.link_count() {
            return Err(PolicyError::BadParameter(format!(
                "{} beta values for {} links",
                beta.len(),
                network.link_count()
            )));
        }
        if let Some(i) = beta.iter().position(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(PolicyError::BadParameter(format!(
                "beta of link `{}` must be positive",
                network.link_name(LinkId(i))
            )));
        }
        if let Some(i) = network.links().iter().position(|l| !l.capacity.is_finite()) {
            return Err(PolicyError::UnboundedCapacity(LinkId(i)));
        }
        Ok(SoftmaxPolicy { beta })
    }

    pub fn uniform(network: &Network, beta: f64) -> Result<Self, PolicyError> {
        Self::new(network, alloc::vec![beta; network.link_count()])
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Congestion cost `phi_e`; `+inf` at (or beyond) a finite buffer.
    pub fn cost(&self, network: &Network, e: LinkId, rho: f64) -> f64 {
        let beta = self.beta[e.0];
        match network.buffer(e) {
            Bound::Finite(b) if rho >= b => f64::INFINITY,
            Bound::Finite(b) => beta * rho / (b - rho),
            Bound::Unbounded => beta * rho,
        }
    }

    fn downstream_costs(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) {
        let mut i = 0;
        for t in local.targets {
            if let crate::graph::Target::Link(k) = t {
                out[i] = self.cost(network, *k, local.downstream[i]);
                i += 1;
            }
        }
    }
}

impl RoutingPolicy for SoftmaxPolicy {
    fn write_split(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) -> Result<(), PolicyError> {
        match local.source {
            Source::Origin(v) => {
                let lambda = network.inflow(v);
                // costs go into `out` first, then get replaced by flows
                self.downstream_costs(network, local, out);
                let min = out.iter().copied().fold(f64::INFINITY, f64::min);
                if min == f64::INFINITY {
                    return Err(PolicyError::ExcludedPoint(local.source));
                }
                let mut z = 0.0;
                for c in out.iter_mut() {
                    *c = math::exp(min - *c);
                    z += *c;
                }
                for f in out.iter_mut() {
                    *f = lambda * *f / z;
                }
                Ok(())
            }
            Source::Link(e) => {
                let cap = network
                    .capacity(e)
                    .finite()
                    .ok_or(PolicyError::UnboundedCapacity(e))?;
                let own_cost = self.cost(network, e, local.own.unwrap_or(0.0));
                let discharge = cap * math::one_minus_exp_neg(own_cost);
                if local.exits() {
                    out[0] = discharge;
                    return Ok(());
                }
                self.downstream_costs(network, local, out);
                let min = out.iter().copied().fold(own_cost, f64::min);
                if min == f64::INFINITY {
                    return Err(PolicyError::ExcludedPoint(local.source));
                }
                let mut z = math::exp(min - own_cost);
                for c in out.iter_mut() {
                    *c = math::exp(min - *c);
                    z += *c;
                }
                for f in out.iter_mut() {
                    *f = discharge * *f / z;
                }
                Ok(())
            }
        }
    }

    fn name(&self) -> String {
        String::from("softmax")
    }
}
