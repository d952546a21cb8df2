use alloc::format;
use alloc::string::String;

use super::{LocalDensity, PolicyError, RoutingPolicy};
use crate::graph::{LinkId, Network, NodeId, Source};
use crate::math;

/// Routing matrices of the four-node motivating network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoutingMatrix {
    /// `R1`: constant splits.
    Fixed,
    /// `R2`: locally responsive splits at nodes `a` and `b`.
    LocallyResponsive,
    /// `R3`: `R2` with the flow-control factor `h` on link 1.
    FlowControl,
}

impl RoutingMatrix {
    pub fn label(self) -> &'static str {
        match self {
            RoutingMatrix::Fixed => "R1",
            RoutingMatrix::LocallyResponsive => "R2",
            RoutingMatrix::FlowControl => "R3",
        }
    }
}

impl core::str::FromStr for RoutingMatrix {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R1" | "r1" | "1" => Ok(RoutingMatrix::Fixed),
            "R2" | "r2" | "2" => Ok(RoutingMatrix::LocallyResponsive),
            "R3" | "r3" | "3" => Ok(RoutingMatrix::FlowControl),
            other => Err(PolicyError::BadParameter(format!("unknown routing matrix `{other}`"))),
        }
    }
}

impl core::fmt::Display for RoutingMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

/// `F_ij = C_i phi(rho_i) R_ij(rho)` with `phi(rho) = 1 - exp(-rho)`, and
/// `lambda R_6j(rho)` for the origin row.
///
/// The network must have the motivating topology: links named `1`..`5`
/// with `1 = (a,b)`, `2 = (a,c)`, `3 = (b,c)`, `4 = (b,d)`, `5 = (c,d)` under
/// any node names, and the single origin at the tail of links 1 and 2.
/// Capacities, inflow and buffers are free.
#[derive(Clone, Debug)]
pub struct MotivatingPolicy {
    matrix: RoutingMatrix,
    links: [LinkId; 5],
    origin: NodeId,
    // targets come in link-id order, which need not follow the link names
    origin_swapped: bool,
    link1_swapped: bool,
}

impl MotivatingPolicy {
    pub fn new(network: &Network, matrix: RoutingMatrix) -> Result<Self, PolicyError> {
        let mismatch = |msg: String| PolicyError::TopologyMismatch(msg);
        if network.link_count() != 5 {
            return Err(mismatch(format!("expected 5 links, found {}", network.link_count())));
        }
        let mut links = [LinkId(0); 5];
        for (i, slot) in links.iter_mut().enumerate() {
            let name = format!("{}", i + 1);
            *slot = network
                .link_by_name(&name)
                .ok_or_else(|| mismatch(format!("no link named `{name}`")))?;
        }
        let end = |i: usize| {
            let l = network.link(links[i]);
            (l.tail, l.head)
        };
        let (a, b) = end(0);
        let (a2, c) = end(1);
        let (b3, c3) = end(2);
        let (b4, d) = end(3);
        let (c5, d5) = end(4);
        if a2 != a || b3 != b || c3 != c || b4 != b || c5 != c || d5 != d || network.node_count() != 4 {
            return Err(mismatch(String::from(
                "links must be 1=(a,b), 2=(a,c), 3=(b,c), 4=(b,d), 5=(c,d)",
            )));
        }
        if network.origins() != [a] {
            return Err(mismatch(String::from("the only origin must be the tail of links 1 and 2")));
        }
        if let Some(&e) = links.iter().find(|&&e| !network.capacity(e).is_finite()) {
            return Err(PolicyError::UnboundedCapacity(e));
        }
        Ok(MotivatingPolicy {
            matrix,
            links,
            origin: a,
            origin_swapped: links[0] > links[1],
            link1_swapped: links[2] > links[3],
        })
    }

    pub fn matrix(&self) -> RoutingMatrix {
        self.matrix
    }

    fn number(&self, e: LinkId) -> usize {
        self.links.iter().position(|&k| k == e).expect("link of this network") + 1
    }
}

fn phi(rho: f64) -> f64 {
    math::one_minus_exp_neg(rho.max(0.0))
}

/// `exp(-x) / (exp(-x) + sum exp(-others))`, evaluated with a shift.
fn logistic_share(x: f64, others: &[f64]) -> f64 {
    let m = others.iter().copied().fold(x, f64::min);
    let num = math::exp(m - x);
    let den = others.iter().fold(num, |acc, &y| acc + math::exp(m - y));
    num / den
}

impl RoutingPolicy for MotivatingPolicy {
    fn write_split(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) -> Result<(), PolicyError> {
        let responsive = self.matrix != RoutingMatrix::Fixed;
        match local.source {
            Source::Origin(v) => {
                debug_assert_eq!(v, self.origin);
                let lambda = network.inflow(v);
                let (i1, i2) = if self.origin_swapped { (1, 0) } else { (0, 1) };
                let (r1, r2) = if responsive {
                    // R61 = 2e^{-rho1} / (2e^{-rho1} + e^{-rho2})
                    let (rho1, rho2) = (local.downstream[i1], local.downstream[i2]);
                    let r1 = logistic_share(rho1 - core::f64::consts::LN_2, &[rho2]);
                    (r1, 1.0 - r1)
                } else {
                    (2.0 / 3.0, 1.0 / 3.0)
                };
                out[i1] = lambda * r1;
                out[i2] = lambda * r2;
                Ok(())
            }
            Source::Link(e) => {
                let cap = network
                    .capacity(e)
                    .finite()
                    .ok_or(PolicyError::UnboundedCapacity(e))?;
                let rho = local.own.unwrap_or(0.0);
                let m = cap * phi(rho);
                if self.number(e) != 1 {
                    // links 2..5 have a single target
                    out[0] = m;
                    return Ok(());
                }
                let (i3, i4) = if self.link1_swapped { (1, 0) } else { (0, 1) };
                let (rho3, rho4) = (local.downstream[i3], local.downstream[i4]);
                let (r13, r14) = match self.matrix {
                    RoutingMatrix::Fixed => (0.5, 0.5),
                    RoutingMatrix::LocallyResponsive => {
                        let r13 = logistic_share(rho3, &[rho4]);
                        (r13, 1.0 - r13)
                    }
                    // R2_13 h = e^{-rho3} / (e^{-rho1} + e^{-rho3} + e^{-rho4})
                    RoutingMatrix::FlowControl => {
                        (logistic_share(rho3, &[rho4, rho]), logistic_share(rho4, &[rho3, rho]))
                    }
                };
                out[i3] = m * r13;
                out[i4] = m * r14;
                Ok(())
            }
        }
    }

    fn name(&self) -> String {
        format!("motivating-{}", self.matrix.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{link, motivating_network};
    use crate::graph::{Bound, NetworkBuilder};
    use alloc::vec::Vec;

    fn eval(p: &MotivatingPolicy, net: &Network, source: Source, rho: &[f64]) -> Vec<f64> {
        let mut scratch = Vec::new();
        let local = LocalDensity::gather(net, source, rho, &mut scratch);
        p.split(net, &local).unwrap().flows
    }

    fn origin(net: &Network) -> Source {
        Source::Origin(net.node_by_name("a").unwrap())
    }

    #[test]
    fn fixed_origin_row() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::Fixed).unwrap();
        for rho in [[0.0; 5], [3.0, 0.1, 7.0, 2.0, 0.5]] {
            let f = eval(&p, &net, origin(&net), &rho);
            assert!((f[0] - 4.0 / 3.0).abs() < 1e-15 && (f[1] - 2.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn responsive_split_is_symmetric() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::LocallyResponsive).unwrap();
        let f = eval(&p, &net, Source::Link(link(1)), &[1.0, 0.0, 0.8, 0.8, 0.0]);
        assert!((f[0] - f[1]).abs() < 1e-15);
        let total = 2.0 * (1.0 - (-1.0f64).exp());
        assert!((f[0] - total / 2.0).abs() < 1e-15);
        // R61 at equal density is 2/3
        let f = eval(&p, &net, origin(&net), &[0.4, 0.4, 0.0, 0.0, 0.0]);
        assert!((f[0] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn flow_control_at_zero() {
        // h = 2/3 and R13 = R14 = 1/3; scaled by C1 phi(rho1) at rho1 = 1 to be non-trivial.
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let f = eval(&p, &net, Source::Link(link(1)), &[0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(f, [0.0, 0.0]);
        let f = eval(&p, &net, Source::Link(link(1)), &[1.0, 0.0, 1.0, 1.0, 0.0]);
        let m = 2.0 * (1.0 - (-1.0f64).exp());
        assert!((f[0] - m / 3.0).abs() < 1e-15 && (f[1] - m / 3.0).abs() < 1e-15);
    }

    #[test]
    fn flow_control_matches_scalar_formula() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let (r1, r3, r4) = (0.3f64, 1.7f64, 0.2f64);
        let f = eval(&p, &net, Source::Link(link(1)), &[r1, 0.0, r3, r4, 0.0]);
        let r2_13 = (-r3).exp() / ((-r4).exp() + (-r3).exp());
        let h = ((-r4).exp() + (-r3).exp()) / ((-r1).exp() + (-r4).exp() + (-r3).exp());
        let m = 2.0 * (1.0 - (-r1).exp());
        assert!((f[0] - m * r2_13 * h).abs() < 1e-15);
        assert!((f[1] - m * (1.0 - r2_13) * h).abs() < 1e-15);
    }

    #[test]
    fn single_target_links_use_phi() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::LocallyResponsive).unwrap();
        let rho = [0.0, 0.5, 1.5, 2.5, 3.5];
        for (n, cap) in [(2, 1.0), (3, 1.0), (4, 1.0), (5, 3.0)] {
            let f = eval(&p, &net, Source::Link(link(n)), &rho);
            assert_eq!(f.len(), 1);
            assert!((f[0] - cap * (1.0 - (-rho[n - 1]).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_other_topologies() {
        let chain = NetworkBuilder::new()
            .link("1", "o", "d", Bound::Finite(1.0), Bound::Unbounded)
            .inflow("o", 1.0)
            .build()
            .unwrap();
        assert!(matches!(
            MotivatingPolicy::new(&chain, RoutingMatrix::Fixed),
            Err(PolicyError::TopologyMismatch(_))
        ));
        assert_eq!("R3".parse::<RoutingMatrix>(), Ok(RoutingMatrix::FlowControl));
        assert!("R4".parse::<RoutingMatrix>().is_err());
    }
}
