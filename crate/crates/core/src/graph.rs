//! Networks, the augmented network and cut set algebra.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Add;

/// Name reserved for the external world node of the augmented network.
pub const WORLD_NODE: &str = "@world";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

/// A capacity or buffer size: a non-negative real or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    /// The value as a float, `f64::INFINITY` when unbounded.
    pub fn as_f64(self) -> f64 {
        match self {
            Bound::Finite(v) => v,
            Bound::Unbounded => f64::INFINITY,
        }
    }

    pub fn sum<I: IntoIterator<Item = Bound>>(iter: I) -> Bound {
        iter.into_iter().fold(Bound::Finite(0.0), |acc, b| acc + b)
    }
}

impl Add for Bound {
    type Output = Bound;

    fn add(self, rhs: Bound) -> Bound {
        match (self, rhs) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a + b),
            _ => Bound::Unbounded,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::Unbounded => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: Bound,
    pub buffer: Bound,
}

/// Who sends flow: a link of the network or the origin link `(w, v)` of an
/// origin node `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Link(LinkId),
    Origin(NodeId),
}

/// Who receives flow: a link of the network or the external world, which is
/// the only downstream target of a link entering a destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Link(LinkId),
    Exit,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("duplicate link `{0}`")]
    DuplicateLink(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("node name `{0}` is reserved for the world node")]
    ReservedName(String),
    #[error("network already contains the world node")]
    WorldNodePresent,
    #[error("invalid network: {0}")]
    Invalid(ValidationReport),
    #[error("a cut must contain at least one node")]
    EmptyCut,
    #[error("cut contains destination node `{0}`")]
    DestinationInCut(String),
    #[error("perturbed capacity {value} of link `{link}` is outside [0, nominal]")]
    BadPerturbation { link: String, value: f64 },
}

/// One failed structural requirement of a network.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    SelfLoop { link: String },
    NoDestination,
    NonPositiveCapacity { link: String },
    NonPositiveBuffer { link: String },
    InflowOnDestination { node: String },
    NegativeInflow { node: String },
    /// Some node is not reachable from an origin, or some non-destination
    /// node cannot reach a destination.
    NotStronglyConnected { unreachable: Vec<String>, stranded: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { link } => write!(f, "link `{link}` is a self-loop"),
            Violation::NoDestination => f.write_str("no destination node"),
            Violation::NonPositiveCapacity { link } => {
                write!(f, "link `{link}` has non-positive capacity")
            }
            Violation::NonPositiveBuffer { link } => {
                write!(f, "link `{link}` has non-positive buffer")
            }
            Violation::InflowOnDestination { node } => {
                write!(f, "destination `{node}` has external inflow")
            }
            Violation::NegativeInflow { node } => write!(f, "node `{node}` has negative inflow"),
            Violation::NotStronglyConnected { unreachable, stranded } => write!(
                f,
                "augmented network not strongly connected (unreachable: {unreachable:?}, no path to a destination: {stranded:?})"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Builds a [`Network`] from user-facing string identifiers.
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    nodes: Vec<String>,
    links: Vec<(String, String, String, Bound, Bound)>,
    inflows: Vec<(String, f64)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a node. Nodes mentioned by links are declared implicitly.
    pub fn node(mut self, name: &str) -> Self {
        self.nodes.push(name.to_string());
        self
    }

    pub fn link(mut self, id: &str, tail: &str, head: &str, capacity: Bound, buffer: Bound) -> Self {
        self.links
            .push((id.to_string(), tail.to_string(), head.to_string(), capacity, buffer));
        self
    }

    pub fn inflow(mut self, node: &str, value: f64) -> Self {
        self.inflows.push((node.to_string(), value));
        self
    }

    pub fn build(self) -> Result<Network, GraphError> {
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut names = Vec::new();
        for n in &self.nodes {
            if n == WORLD_NODE {
                return Err(GraphError::ReservedName(n.clone()));
            }
            if index.insert(n.clone(), names.len()).is_some() {
                return Err(GraphError::DuplicateNode(n.clone()));
            }
            names.push(n.clone());
        }
        let mut links = Vec::with_capacity(self.links.len());
        let mut link_names = BTreeMap::new();
        for (id, tail, head, capacity, buffer) in self.links {
            let mut resolve = |name: &String| -> Result<NodeId, GraphError> {
                if name == WORLD_NODE {
                    return Err(GraphError::ReservedName(name.clone()));
                }
                let next = names.len();
                let i = *index.entry(name.clone()).or_insert(next);
                if i == next {
                    names.push(name.clone());
                }
                Ok(NodeId(i))
            };
            let tail = resolve(&tail)?;
            let head = resolve(&head)?;
            if link_names.insert(id.clone(), links.len()).is_some() {
                return Err(GraphError::DuplicateLink(id));
            }
            links.push(Link { name: id, tail, head, capacity, buffer });
        }
        let mut inflow = vec![0.0; names.len()];
        for (node, value) in self.inflows {
            let i = *index.get(&node).ok_or(GraphError::UnknownNode(node))?;
            inflow[i] += value;
        }
        Ok(Network::assemble(names, links, inflow, None))
    }
}

/// A network `G = (V, E, C)` with buffers and external inflows.
///
/// Immutable after construction. Perturbations produce new values through
/// [`Network::with_capacities`].
#[derive(Clone, Debug)]
pub struct Network {
    node_names: Vec<String>,
    links: Vec<Link>,
    inflow: Vec<f64>,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
    link_targets: Vec<Vec<Target>>,
    origin_targets: Vec<Vec<Target>>,
    sources: Vec<Source>,
    nominal: Option<Vec<Bound>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.node_names == other.node_names
            && self.links == other.links
            && self.inflow == other.inflow
            && self.nominal == other.nominal
    }
}

impl Network {
    fn assemble(
        node_names: Vec<String>,
        links: Vec<Link>,
        inflow: Vec<f64>,
        nominal: Option<Vec<Bound>>,
    ) -> Network {
        let n = node_names.len();
        let mut out_links = vec![Vec::new(); n];
        let mut in_links = vec![Vec::new(); n];
        for (i, l) in links.iter().enumerate() {
            out_links[l.tail.0].push(LinkId(i));
            in_links[l.head.0].push(LinkId(i));
        }
        let as_targets = |v: usize| -> Vec<Target> {
            if out_links[v].is_empty() {
                vec![Target::Exit]
            } else {
                out_links[v].iter().map(|&e| Target::Link(e)).collect()
            }
        };
        let link_targets = links.iter().map(|l| as_targets(l.head.0)).collect();
        let origin_targets = (0..n)
            .map(|v| {
                if inflow[v] > 0.0 && !out_links[v].is_empty() {
                    as_targets(v)
                } else {
                    Vec::new()
                }
            })
            .collect::<Vec<_>>();
        let mut sources: Vec<Source> = (0..links.len()).map(|i| Source::Link(LinkId(i))).collect();
        sources.extend(
            (0..n)
                .filter(|&v| !origin_targets[v].is_empty())
                .map(|v| Source::Origin(NodeId(v))),
        );
        Network {
            node_names,
            links,
            inflow,
            out_links,
            in_links,
            link_targets,
            origin_targets,
            sources,
            nominal,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_names.len()).map(NodeId)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, e: LinkId) -> &Link {
        &self.links[e.0]
    }

    pub fn node_name(&self, v: NodeId) -> &str {
        &self.node_names[v.0]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn link_name(&self, e: LinkId) -> &str {
        &self.links[e.0].name
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn link_by_name(&self, name: &str) -> Option<LinkId> {
        self.links.iter().position(|l| l.name == name).map(LinkId)
    }

    /// External inflow `lambda_v` (zero for destinations in a valid network).
    pub fn inflow(&self, v: NodeId) -> f64 {
        self.inflow[v.0]
    }

    pub fn inflows(&self) -> &[f64] {
        &self.inflow
    }

    pub fn total_inflow(&self) -> f64 {
        self.inflow.iter().sum()
    }

    /// Links leaving `v`.
    pub fn out_links(&self, v: NodeId) -> &[LinkId] {
        &self.out_links[v.0]
    }

    /// Links entering `v`.
    pub fn in_links(&self, v: NodeId) -> &[LinkId] {
        &self.in_links[v.0]
    }

    pub fn is_destination(&self, v: NodeId) -> bool {
        self.out_links[v.0].is_empty()
    }

    pub fn destinations(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.is_destination(v)).collect()
    }

    pub fn non_destinations(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| !self.is_destination(v)).collect()
    }

    /// Nodes with strictly positive inflow.
    pub fn origins(&self) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.inflow[v.0] > 0.0).collect()
    }

    /// Whether link `e` enters a destination node.
    pub fn enters_destination(&self, e: LinkId) -> bool {
        self.is_destination(self.links[e.0].head)
    }

    /// Links entering destination nodes.
    pub fn destination_links(&self) -> Vec<LinkId> {
        (0..self.links.len())
            .map(LinkId)
            .filter(|&e| self.enters_destination(e))
            .collect()
    }

    /// Every flow sender: all links, followed by the origin links.
    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    /// Downstream targets of a source, in link-id order.
    pub fn targets(&self, source: Source) -> &[Target] {
        match source {
            Source::Link(e) => &self.link_targets[e.0],
            Source::Origin(v) => &self.origin_targets[v.0],
        }
    }

    pub fn capacity(&self, e: LinkId) -> Bound {
        self.links[e.0].capacity
    }

    pub fn buffer(&self, e: LinkId) -> Bound {
        self.links[e.0].buffer
    }

    pub fn all_buffers_finite(&self) -> bool {
        self.links.iter().all(|l| l.buffer.is_finite())
    }

    pub fn all_buffers_unbounded(&self) -> bool {
        self.links.iter().all(|l| !l.buffer.is_finite())
    }

    /// Nominal capacities when this network is a perturbation of another.
    pub fn nominal_capacities(&self) -> Option<&[Bound]> {
        self.nominal.as_deref()
    }

    /// A perturbed copy with the given capacities replaced.
    ///
    /// Each new capacity must lie in `[0, C_e]` where `C_e` is the nominal
    /// capacity (the capacity of the unperturbed network). Zero capacities
    /// are allowed here even though a base network requires `C_e > 0`.
    pub fn with_capacities(&self, changes: &[(LinkId, f64)]) -> Result<Network, GraphError> {
        let nominal: Vec<Bound> = match &self.nominal {
            Some(n) => n.clone(),
            None => self.links.iter().map(|l| l.capacity).collect(),
        };
        let mut links = self.links.clone();
        for &(e, value) in changes {
            let within = value >= 0.0 && Bound::Finite(value).as_f64() <= nominal[e.0].as_f64();
            if !within || value.is_nan() {
                return Err(GraphError::BadPerturbation {
                    link: self.links[e.0].name.clone(),
                    value,
                });
            }
            links[e.0].capacity = Bound::Finite(value);
        }
        Ok(Network::assemble(
            self.node_names.clone(),
            links,
            self.inflow.clone(),
            Some(nominal),
        ))
    }

    /// Same topology and capacities with different buffers.
    pub fn with_buffers(&self, buffer: Bound) -> Network {
        let mut links = self.links.clone();
        for l in &mut links {
            l.buffer = buffer;
        }
        Network::assemble(self.node_names.clone(), links, self.inflow.clone(), self.nominal.clone())
    }

    /// Same topology with different inflows (indexed by node).
    pub fn with_inflows(&self, inflow: Vec<f64>) -> Network {
        assert_eq!(inflow.len(), self.node_names.len());
        Network::assemble(self.node_names.clone(), self.links.clone(), inflow, self.nominal.clone())
    }
}

/// Checks every structural requirement and lists each failure.
pub fn validate(network: &Network) -> ValidationReport {
    let mut violations = Vec::new();
    for (i, l) in network.links.iter().enumerate() {
        if l.tail == l.head {
            violations.push(Violation::SelfLoop { link: l.name.clone() });
        }
        let cap_ok = match (l.capacity, network.nominal.as_ref()) {
            (Bound::Finite(c), None) => c > 0.0,
            (Bound::Finite(c), Some(nominal)) => c >= 0.0 && c <= nominal[i].as_f64(),
            (Bound::Unbounded, _) => true,
        };
        if !cap_ok {
            violations.push(Violation::NonPositiveCapacity { link: l.name.clone() });
        }
        if let Bound::Finite(b) = l.buffer {
            if !(b > 0.0) {
                violations.push(Violation::NonPositiveBuffer { link: l.name.clone() });
            }
        }
    }
    let destinations = network.destinations();
    if destinations.is_empty() {
        violations.push(Violation::NoDestination);
    }
    for v in network.nodes() {
        let lambda = network.inflow(v);
        if lambda.is_nan() || lambda < 0.0 {
            violations.push(Violation::NegativeInflow { node: network.node_name(v).to_string() });
        } else if lambda > 0.0 && network.is_destination(v) {
            violations.push(Violation::InflowOnDestination { node: network.node_name(v).to_string() });
        }
    }
    if !destinations.is_empty() {
        let (unreachable, stranded) = connectivity_gaps(network);
        if !unreachable.is_empty() || !stranded.is_empty() {
            let names = |vs: Vec<NodeId>| vs.into_iter().map(|v| network.node_name(v).to_string()).collect();
            violations.push(Violation::NotStronglyConnected {
                unreachable: names(unreachable),
                stranded: names(stranded),
            });
        }
    }
    ValidationReport { violations }
}

/// Nodes not reachable from the world node, and nodes that cannot reach it,
/// in the augmented network.
fn connectivity_gaps(network: &Network) -> (Vec<NodeId>, Vec<NodeId>) {
    let n = network.node_count();
    let bfs = |starts: Vec<usize>, forward: bool| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for s in starts {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let adj = if forward { &network.out_links[v] } else { &network.in_links[v] };
            for &e in adj {
                let l = &network.links[e.0];
                let u = if forward { l.head.0 } else { l.tail.0 };
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    };
    let from_world = bfs(network.origins().into_iter().map(|v| v.0).collect(), true);
    let to_world = bfs(network.destinations().into_iter().map(|v| v.0).collect(), false);
    // without inflow every density stays at zero, so reachability is moot
    let unreachable = if network.total_inflow() > 0.0 {
        (0..n).filter(|&v| !from_world[v]).map(NodeId).collect()
    } else {
        Vec::new()
    };
    let stranded = (0..n).filter(|&v| !to_world[v]).map(NodeId).collect();
    (unreachable, stranded)
}

/// The augmented network `G^a`: the base network plus a world node `w`,
/// origin links `(w, v)` for every origin and destination links `(d, w)`
/// for every destination, all with unbounded capacity.
#[derive(Clone, Debug)]
pub struct AugmentedNetwork {
    pub base: Network,
    pub origin_links: Vec<NodeId>,
    pub destination_links: Vec<NodeId>,
}

/// Builds `G^a`, rejecting invalid networks and networks that already
/// contain the world node.
pub fn augment(network: &Network) -> Result<AugmentedNetwork, GraphError> {
    if network.node_names.iter().any(|n| n == WORLD_NODE) {
        return Err(GraphError::WorldNodePresent);
    }
    let report = validate(network);
    if !report.is_valid() {
        return Err(GraphError::Invalid(report));
    }
    Ok(AugmentedNetwork {
        base: network.clone(),
        origin_links: network.origins(),
        destination_links: network.destinations(),
    })
}

impl AugmentedNetwork {
    pub fn world(&self) -> NodeId {
        NodeId(self.base.node_count())
    }

    pub fn extra_link_count(&self) -> usize {
        self.origin_links.len() + self.destination_links.len()
    }

    /// Materializes `G^a` as a plain network. Origin links are named
    /// `@in:<node>` and destination links `@out:<node>`.
    pub fn as_network(&self) -> Network {
        let mut names = self.base.node_names.clone();
        names.push(WORLD_NODE.to_string());
        let w = NodeId(names.len() - 1);
        let mut links = self.base.links.clone();
        for &v in &self.origin_links {
            links.push(Link {
                name: alloc::format!("@in:{}", self.base.node_name(v)),
                tail: w,
                head: v,
                capacity: Bound::Unbounded,
                buffer: Bound::Unbounded,
            });
        }
        for &d in &self.destination_links {
            links.push(Link {
                name: alloc::format!("@out:{}", self.base.node_name(d)),
                tail: d,
                head: w,
                capacity: Bound::Unbounded,
                buffer: Bound::Unbounded,
            });
        }
        let inflow = vec![0.0; names.len()];
        Network::assemble(names, links, inflow, None)
    }

    /// Strong connectivity of the materialized graph, checked directly.
    pub fn is_strongly_connected(&self) -> bool {
        let g = self.as_network();
        let n = g.node_count();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![n - 1];
            seen[n - 1] = true;
            while let Some(v) = stack.pop() {
                let adj = if forward { &g.out_links[v] } else { &g.in_links[v] };
                for &e in adj {
                    let l = &g.links[e.0];
                    let u = if forward { l.head.0 } else { l.tail.0 };
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// A cut: a non-empty set of non-destination nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cut {
    members: Vec<bool>,
}

impl Cut {
    pub fn new<I: IntoIterator<Item = NodeId>>(network: &Network, nodes: I) -> Result<Cut, GraphError> {
        let mut members = vec![false; network.node_count()];
        let mut any = false;
        for v in nodes {
            if network.is_destination(v) {
                return Err(GraphError::DestinationInCut(network.node_name(v).to_string()));
            }
            members[v.0] = true;
            any = true;
        }
        if !any {
            return Err(GraphError::EmptyCut);
        }
        Ok(Cut { members })
    }

    pub fn from_names(network: &Network, names: &[&str]) -> Result<Cut, GraphError> {
        let ids = names
            .iter()
            .map(|n| network.node_by_name(n).ok_or_else(|| GraphError::UnknownNode(n.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Cut::new(network, ids)
    }

    /// The whole non-destination node set `V \ D`.
    pub fn all_non_destinations(network: &Network) -> Result<Cut, GraphError> {
        Cut::new(network, network.non_destinations())
    }

    pub(crate) fn from_mask(members: Vec<bool>) -> Cut {
        Cut { members }
    }

    /// Membership flags indexed by node.
    pub fn mask(&self) -> &[bool] {
        &self.members
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.get(v.0).copied().unwrap_or(false)
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| NodeId(i))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn union(&self, other: &Cut) -> Cut {
        Cut {
            members: self.members.iter().zip(&other.members).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn names(&self, network: &Network) -> Vec<String> {
        self.nodes().into_iter().map(|v| network.node_name(v).to_string()).collect()
    }
}

/// The four link sets of a cut `U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutSets {
    /// `E_U^+`: links leaving a node of `U`.
    pub outgoing: Vec<LinkId>,
    /// `E_U^-`: links entering a node of `U`.
    pub incoming: Vec<LinkId>,
    /// `∂_U^+`: links from `U` to outside `U`.
    pub boundary_out: Vec<LinkId>,
    /// `∂_U^-`: links from outside `U` into `U`.
    pub boundary_in: Vec<LinkId>,
}

pub fn cut_sets(network: &Network, cut: &Cut) -> CutSets {
    let mut sets = CutSets {
        outgoing: Vec::new(),
        incoming: Vec::new(),
        boundary_out: Vec::new(),
        boundary_in: Vec::new(),
    };
    for (i, l) in network.links.iter().enumerate() {
        let e = LinkId(i);
        let (t, h) = (cut.contains(l.tail), cut.contains(l.head));
        if t {
            sets.outgoing.push(e);
            if !h {
                sets.boundary_out.push(e);
            }
        }
        if h {
            sets.incoming.push(e);
            if !t {
                sets.boundary_in.push(e);
            }
        }
    }
    sets
}

/// `C_U`: total capacity of the links leaving `U`.
pub fn cut_capacity(network: &Network, cut: &Cut) -> Bound {
    Bound::sum(
        network
            .links
            .iter()
            .filter(|l| cut.contains(l.tail) && !cut.contains(l.head))
            .map(|l| l.capacity),
    )
}

/// `lambda_U`: total external inflow into `U`.
pub fn cut_inflow(network: &Network, cut: &Cut) -> f64 {
    network
        .inflow
        .iter()
        .enumerate()
        .filter(|(v, _)| cut.contains(NodeId(*v)))
        .map(|(_, l)| l)
        .sum()
}

/// `lambda_U - C_U`, `-inf` when the cut has unbounded capacity.
pub fn cut_violation(network: &Network, cut: &Cut) -> f64 {
    cut_inflow(network, cut) - cut_capacity(network, cut).as_f64()
}

/// `C^X_Y`: total capacity of links from node set `from` to node set `to`.
pub fn capacity_between(network: &Network, from: &[bool], to: &[bool]) -> Bound {
    Bound::sum(
        network
            .links
            .iter()
            .filter(|l| from[l.tail.0] && to[l.head.0])
            .map(|l| l.capacity),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::motivating_network;

    fn ids(net: &Network, names: &[&str]) -> Vec<LinkId> {
        names.iter().map(|n| net.link_by_name(n).unwrap()).collect()
    }

    #[test]
    fn motivating_network_is_valid() {
        let net = motivating_network(Bound::Unbounded);
        assert!(validate(&net).is_valid(), "{}", validate(&net));
        assert_eq!(net.destinations(), vec![net.node_by_name("d").unwrap()]);
        assert_eq!(net.origins(), vec![net.node_by_name("a").unwrap()]);
    }

    #[test]
    fn self_loop_without_destination() {
        let net = NetworkBuilder::new()
            .link("1", "a", "a", Bound::Finite(1.0), Bound::Unbounded)
            .inflow("a", 1.0)
            .build()
            .unwrap();
        let report = validate(&net);
        assert!(report.violations.contains(&Violation::SelfLoop { link: "1".into() }));
        assert!(report.violations.contains(&Violation::NoDestination));
    }

    #[test]
    fn disjoint_chains_are_not_strongly_connected() {
        let net = NetworkBuilder::new()
            .link("1", "o1", "d1", Bound::Finite(1.0), Bound::Unbounded)
            .link("2", "o2", "d2", Bound::Finite(1.0), Bound::Unbounded)
            .inflow("o1", 1.0)
            .build()
            .unwrap();
        let report = validate(&net);
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::NotStronglyConnected { unreachable, stranded } => {
                assert_eq!(unreachable, &vec!["o2".to_string(), "d2".to_string()]);
                assert!(stranded.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_values_reported() {
        let net = NetworkBuilder::new()
            .link("1", "a", "b", Bound::Finite(0.0), Bound::Finite(-1.0))
            .link("2", "a", "b", Bound::Finite(1.0), Bound::Unbounded)
            .inflow("a", 1.0)
            .inflow("b", 1.0)
            .build()
            .unwrap();
        let report = validate(&net);
        assert!(report.violations.contains(&Violation::NonPositiveCapacity { link: "1".into() }));
        assert!(report.violations.contains(&Violation::NonPositiveBuffer { link: "1".into() }));
        assert!(report.violations.contains(&Violation::InflowOnDestination { node: "b".into() }));
    }

    #[test]
    fn builder_rejects_duplicates_and_unknowns() {
        let dup = NetworkBuilder::new()
            .link("1", "a", "b", Bound::Finite(1.0), Bound::Unbounded)
            .link("1", "a", "b", Bound::Finite(1.0), Bound::Unbounded)
            .build();
        assert_eq!(dup.unwrap_err(), GraphError::DuplicateLink("1".into()));
        let unknown = NetworkBuilder::new()
            .link("1", "a", "b", Bound::Finite(1.0), Bound::Unbounded)
            .inflow("z", 1.0)
            .build();
        assert_eq!(unknown.unwrap_err(), GraphError::UnknownNode("z".into()));
        let reserved = NetworkBuilder::new()
            .link("1", WORLD_NODE, "b", Bound::Finite(1.0), Bound::Unbounded)
            .build();
        assert!(matches!(reserved, Err(GraphError::ReservedName(_))));
    }

    #[test]
    fn augment_adds_world_links() {
        let net = motivating_network(Bound::Unbounded);
        let aug = augment(&net).unwrap();
        assert_eq!(aug.origin_links, vec![net.node_by_name("a").unwrap()]);
        assert_eq!(aug.destination_links, vec![net.node_by_name("d").unwrap()]);
        assert!(aug.is_strongly_connected());
        let g = aug.as_network();
        assert_eq!(g.link_count(), net.link_count() + 2);
        assert!(g.links()[5..].iter().all(|l| l.capacity == Bound::Unbounded));
        // augmenting the augmented graph is rejected
        assert_eq!(augment(&g).unwrap_err(), GraphError::WorldNodePresent);
    }

    #[test]
    fn augment_two_origins_two_destinations() {
        let net = NetworkBuilder::new()
            .link("1", "o1", "m", Bound::Finite(1.0), Bound::Unbounded)
            .link("2", "o2", "m", Bound::Finite(1.0), Bound::Unbounded)
            .link("3", "m", "d1", Bound::Finite(1.0), Bound::Unbounded)
            .link("4", "m", "d2", Bound::Finite(1.0), Bound::Unbounded)
            .inflow("o1", 0.5)
            .inflow("o2", 0.5)
            .inflow("m", 0.0)
            .build()
            .unwrap();
        let aug = augment(&net).unwrap();
        assert_eq!(aug.extra_link_count(), 4);
        assert!(aug.is_strongly_connected());
    }

    #[test]
    fn augment_accepts_zero_inflow() {
        let net = motivating_network(Bound::Unbounded).with_inflows(vec![0.0; 4]);
        let aug = augment(&net).unwrap();
        assert!(aug.origin_links.is_empty());
    }

    #[test]
    fn cut_sets_on_motivating_network() {
        let net = motivating_network(Bound::Unbounded);
        let ab = Cut::from_names(&net, &["a", "b"]).unwrap();
        let s = cut_sets(&net, &ab);
        assert_eq!(s.boundary_out, ids(&net, &["2", "3", "4"]));
        assert_eq!(s.outgoing, ids(&net, &["1", "2", "3", "4"]));
        assert!(s.boundary_in.is_empty());

        let b = Cut::from_names(&net, &["b"]).unwrap();
        let s = cut_sets(&net, &b);
        assert_eq!(s.boundary_in, ids(&net, &["1"]));
        assert_eq!(s.boundary_out, ids(&net, &["3", "4"]));

        let all = Cut::all_non_destinations(&net).unwrap();
        assert!(cut_sets(&net, &all).boundary_in.is_empty());
    }

    #[test]
    fn cut_capacities_on_motivating_network() {
        let net = motivating_network(Bound::Unbounded);
        let abc = Cut::from_names(&net, &["a", "b", "c"]).unwrap();
        assert_eq!(cut_capacity(&net, &abc), Bound::Finite(4.0));
        let ab = Cut::from_names(&net, &["a", "b"]).unwrap();
        assert_eq!(cut_capacity(&net, &ab), Bound::Finite(3.0));
        assert_eq!(cut_inflow(&net, &ab), 2.0);
        let c = Cut::from_names(&net, &["c"]).unwrap();
        assert_eq!(cut_inflow(&net, &c), 0.0);
    }

    #[test]
    fn unbounded_capacity_propagates() {
        let net = NetworkBuilder::new()
            .link("1", "a", "b", Bound::Unbounded, Bound::Unbounded)
            .link("2", "b", "d", Bound::Finite(1.0), Bound::Unbounded)
            .inflow("a", 1.0)
            .build()
            .unwrap();
        let a = Cut::from_names(&net, &["a"]).unwrap();
        assert_eq!(cut_capacity(&net, &a), Bound::Unbounded);
        assert_eq!(cut_violation(&net, &a), f64::NEG_INFINITY);
    }

    #[test]
    fn cut_rejects_destination_and_empty() {
        let net = motivating_network(Bound::Unbounded);
        assert!(matches!(Cut::from_names(&net, &["a", "d"]), Err(GraphError::DestinationInCut(_))));
        assert_eq!(Cut::new(&net, []), Err(GraphError::EmptyCut));
    }

    #[test]
    fn whole_cut_matches_totals() {
        let net = motivating_network(Bound::Unbounded);
        let all = Cut::all_non_destinations(&net).unwrap();
        let into_dest = Bound::sum(net.destination_links().into_iter().map(|e| net.capacity(e)));
        assert_eq!(cut_capacity(&net, &all), into_dest);
        assert_eq!(cut_inflow(&net, &all), net.total_inflow());
    }

    #[test]
    fn perturbation_bounds() {
        let net = motivating_network(Bound::Unbounded);
        let e3 = net.link_by_name("3").unwrap();
        let p = net.with_capacities(&[(e3, 0.0)]).unwrap();
        assert!(validate(&p).is_valid());
        assert_eq!(p.capacity(e3), Bound::Finite(0.0));
        assert!(p.with_capacities(&[(e3, 0.5)]).is_ok(), "nominal is kept across perturbations");
        assert!(net.with_capacities(&[(e3, 1.5)]).is_err());
        assert!(net.with_capacities(&[(e3, -0.1)]).is_err());
    }

    #[test]
    fn targets_and_sources() {
        let net = motivating_network(Bound::Unbounded);
        let e1 = net.link_by_name("1").unwrap();
        let e4 = net.link_by_name("4").unwrap();
        assert_eq!(
            net.targets(Source::Link(e1)),
            &[Target::Link(net.link_by_name("3").unwrap()), Target::Link(e4)]
        );
        assert_eq!(net.targets(Source::Link(e4)), &[Target::Exit]);
        let a = net.node_by_name("a").unwrap();
        assert_eq!(net.targets(Source::Origin(a)).len(), 2);
        assert_eq!(net.sources().len(), 6);
    }
}
