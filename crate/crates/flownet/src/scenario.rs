//! Scenario files (JSON or TOML): network, policy, initial state, staged
//! capacity changes and run settings.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use flownet_core::analysis::{PerturbationFamily, Thresholds};
use flownet_core::dynamics::IntegrationConfig;
use flownet_core::graph::{validate, GraphError};
use flownet_core::routing::{MotivatingPolicy, PolicyError, RoutingMatrix, SoftmaxPolicy};
use flownet_core::{Bound, LinkId, Network, NetworkBuilder, RoutingPolicy};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("TOML: {0}")]
    TomlRead(#[from] toml::de::Error),
    #[error("TOML: {0}")]
    TomlWrite(#[from] toml::ser::Error),
    #[error("unknown scenario format `{0}` (expected .json or .toml)")]
    UnknownFormat(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{0}")]
    Invalid(String),
}

impl ScenarioError {
    /// Syntax-level problems, as opposed to well-formed but invalid content.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            ScenarioError::Io { .. }
                | ScenarioError::Json(_)
                | ScenarioError::TomlRead(_)
                | ScenarioError::UnknownFormat(_)
        )
    }
}

/// A capacity or buffer: a number, or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level(pub Bound);

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Bound::Finite(x) => s.serialize_f64(x),
            Bound::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Level;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, x: f64) -> Result<Level, E> {
                if x == f64::INFINITY {
                    Ok(Level(Bound::Unbounded))
                } else if x.is_finite() {
                    Ok(Level(Bound::Finite(x)))
                } else {
                    Err(E::custom(format!("{x} is not a valid level")))
                }
            }

            fn visit_i64<E: de::Error>(self, x: i64) -> Result<Level, E> {
                Ok(Level(Bound::Finite(x as f64)))
            }

            fn visit_u64<E: de::Error>(self, x: u64) -> Result<Level, E> {
                Ok(Level(Bound::Finite(x as f64)))
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<Level, E> {
                match s.trim().to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" | "unbounded" => Ok(Level(Bound::Unbounded)),
                    other => other
                        .parse::<f64>()
                        .map_err(|_| E::custom(format!("`{s}` is neither a number nor \"inf\"")))
                        .and_then(|x| self.visit_f64(x)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub capacity: Level,
    pub buffer: Level,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Uniform(f64),
    PerLink(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Softmax {
        beta: Beta,
    },
    /// The three routing matrices of the four-node example network.
    Motivating {
        matrix: String,
    },
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Softmax { beta: Beta::Uniform(1.0) }
    }
}

/// A built policy.
#[derive(Clone, Debug)]
pub enum Policy {
    Softmax(SoftmaxPolicy),
    Motivating(MotivatingPolicy),
}

impl Policy {
    pub fn as_dyn(&self) -> &dyn RoutingPolicy {
        match self {
            Policy::Softmax(p) => p,
            Policy::Motivating(p) => p,
        }
    }
}

impl PolicySpec {
    pub fn build(&self, network: &Network) -> Result<Policy, ScenarioError> {
        match self {
            PolicySpec::Softmax { beta: Beta::Uniform(b) } => Ok(Policy::Softmax(SoftmaxPolicy::uniform(network, *b)?)),
            PolicySpec::Softmax { beta: Beta::PerLink(b) } => Ok(Policy::Softmax(SoftmaxPolicy::new(network, b.clone())?)),
            PolicySpec::Motivating { matrix } => {
                let m: RoutingMatrix = matrix
                    .parse()
                    .map_err(|_| ScenarioError::Invalid(format!("unknown routing matrix `{matrix}`")))?;
                Ok(Policy::Motivating(MotivatingPolicy::new(network, m)?))
            }
        }
    }
}

/// Initial densities: `"zero"`, `"random"`, `"random(<seed>)"` or an
/// explicit vector in link order.
#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    Zero,
    /// `None` takes the seed from the command line.
    Random(Option<u64>),
    Explicit(Vec<f64>),
}

impl Default for Initial {
    fn default() -> Self {
        Initial::Zero
    }
}

impl Serialize for Initial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Initial::Zero => s.serialize_str("zero"),
            Initial::Random(None) => s.serialize_str("random"),
            Initial::Random(Some(seed)) => s.serialize_str(&format!("random({seed})")),
            Initial::Explicit(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Initial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Vector(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Vector(v) => Ok(Initial::Explicit(v)),
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}

impl std::str::FromStr for Initial {
    type Err = String;

    fn from_str(t: &str) -> Result<Self, String> {
        let t = t.trim();
        if t == "zero" {
            return Ok(Initial::Zero);
        }
        if t == "random" {
            return Ok(Initial::Random(None));
        }
        if let Some(inner) = t.strip_prefix("random(").and_then(|r| r.strip_suffix(')')) {
            return inner
                .trim()
                .parse()
                .map(|s| Initial::Random(Some(s)))
                .map_err(|_| format!("bad seed in `{t}`"));
        }
        Err(format!("initial condition `{t}` is not \"zero\", \"random(<seed>)\" or a vector"))
    }
}

/// Capacities switched at time `at`; changes accumulate over stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub at: f64,
    pub capacities: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_step: Option<f64>,
    /// Band below a finite buffer that ends the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_hit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_equilibrium: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_at_equilibrium: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl IntegrationSpec {
    pub fn config(&self) -> IntegrationConfig {
        let d = IntegrationConfig::default();
        IntegrationConfig {
            t0: 0.0,
            t_max: self.t_max.unwrap_or(d.t_max),
            dt_init: self.dt_init.unwrap_or(d.dt_init),
            rtol: self.rtol.unwrap_or(d.rtol),
            atol: self.atol.unwrap_or(d.atol),
            tol_step: self.tol_step.unwrap_or(d.tol_step),
            tol_buffer: self.tol_hit.unwrap_or(d.tol_buffer),
            tol_equilibrium: self.tol_equilibrium.or(d.tol_equilibrium),
            equilibrium_window: self.equilibrium_window.unwrap_or(d.equilibrium_window),
            stop_at_equilibrium: self.stop_at_equilibrium.unwrap_or(d.stop_at_equilibrium),
            sample_interval: self.sample_interval.or(d.sample_interval),
            h_min: d.h_min,
            h_max: self.h_max.unwrap_or(d.h_max),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Distance below a finite buffer that counts as reaching it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_buffer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_flow: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_window: Option<f64>,
    /// Random initial states used to cross-check an equilibrium.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus_runs: Option<usize>,
}

impl AnalysisSpec {
    pub fn thresholds(&self) -> Thresholds {
        let d = Thresholds::default();
        Thresholds {
            tol_buffer: self.tol_buffer.unwrap_or(d.tol_buffer),
            r2_min: self.r2_min.unwrap_or(d.r2_min),
            tol_slope: self.tol_slope.or(d.tol_slope),
            drift_tol: self.drift_tol.unwrap_or(d.drift_tol),
            tol_flow: self.tol_flow.or(d.tol_flow),
            growth_window: self.growth_window.unwrap_or(d.growth_window),
            flow_window: self.flow_window.unwrap_or(d.flow_window),
            fit_points: d.fit_points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Sequential { links: Vec<String> },
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResilienceSpec {
    pub family: FamilySpec,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default)]
    pub nodes: Vec<String>,
    #[serde(default)]
    pub inflows: BTreeMap<String, f64>,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub policy: PolicySpec,
    pub links: Vec<LinkSpec>,
    /// Capacity changes in force from the start.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub perturbation: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageSpec>,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resilience: Option<ResilienceSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Format, ScenarioError> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "json" => Ok(Format::Json),
            Some(e) if e == "toml" => Ok(Format::Toml),
            other => Err(ScenarioError::UnknownFormat(other.unwrap_or_default())),
        }
    }
}

impl Scenario {
    pub fn parse(text: &str, format: Format) -> Result<Scenario, ScenarioError> {
        let s: Scenario = match format {
            Format::Json => serde_json::from_str(text)?,
            Format::Toml => toml::from_str(text)?,
        };
        Ok(s.normalized())
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let format = Format::from_path(path)?;
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Scenario::parse(&text, format)
    }

    pub fn to_string(&self, format: Format) -> Result<String, ScenarioError> {
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(self)? + "\n",
            Format::Toml => toml::to_string(self)?,
        })
    }

    /// Lists every node, in order of first mention.
    pub fn normalized(mut self) -> Scenario {
        for l in &self.links {
            for n in [&l.tail, &l.head] {
                if !self.nodes.contains(n) {
                    self.nodes.push(n.clone());
                }
            }
        }
        self
    }

    /// The nominal network, validated.
    pub fn nominal_network(&self) -> Result<Network, ScenarioError> {
        let mut b = NetworkBuilder::new();
        for n in &self.nodes {
            b = b.node(n);
        }
        for l in &self.links {
            b = b.link(&l.id, &l.tail, &l.head, l.capacity.0, l.buffer.0);
        }
        for (n, v) in &self.inflows {
            b = b.inflow(n, *v);
        }
        let net = b.build()?;
        let report = validate(&net);
        if !report.is_valid() {
            return Err(GraphError::Invalid(report).into());
        }
        Ok(net)
    }

    fn changes(&self, network: &Network, map: &BTreeMap<String, f64>) -> Result<Vec<(LinkId, f64)>, ScenarioError> {
        map.iter()
            .map(|(id, c)| {
                network
                    .link_by_name(id)
                    .map(|e| (e, *c))
                    .ok_or_else(|| GraphError::UnknownLink(id.clone()).into())
            })
            .collect()
    }

    /// Start time and network of every stage: the perturbed network from
    /// `t = 0`, then one per switch.
    pub fn stage_networks(&self) -> Result<Vec<(f64, Network)>, ScenarioError> {
        let nominal = self.nominal_network()?;
        let mut current = self.changes(&nominal, &self.perturbation)?;
        let mut out = vec![(0.0, nominal.with_capacities(&current)?)];
        let mut last = 0.0;
        for s in &self.stages {
            if !(s.at > last) {
                return Err(ScenarioError::Invalid(format!(
                    "stage switch times must increase and be positive (got {} after {last})",
                    s.at
                )));
            }
            last = s.at;
            for (e, c) in self.changes(&nominal, &s.capacities)? {
                match current.iter_mut().find(|x| x.0 == e) {
                    Some(x) => x.1 = c,
                    None => current.push((e, c)),
                }
            }
            out.push((s.at, nominal.with_capacities(&current)?));
        }
        Ok(out)
    }

    /// The network of the last stage.
    pub fn final_network(&self) -> Result<Network, ScenarioError> {
        Ok(self.stage_networks()?.pop().expect("at least one stage").1)
    }

    pub fn initial_state(&self, network: &Network, seed: u64) -> Result<Vec<f64>, ScenarioError> {
        match &self.initial {
            Initial::Zero => Ok(vec![0.0; network.link_count()]),
            Initial::Random(s) => Ok(flownet_core::analysis::random_initial_state(network, s.unwrap_or(seed))),
            Initial::Explicit(v) => {
                if v.len() != network.link_count() {
                    return Err(ScenarioError::Invalid(format!(
                        "initial state has {} entries for {} links",
                        v.len(),
                        network.link_count()
                    )));
                }
                flownet_core::dynamics::check_state(network, v)
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                Ok(v.clone())
            }
        }
    }

    pub fn family(&self, network: &Network, spec: &FamilySpec) -> Result<PerturbationFamily, ScenarioError> {
        Ok(match spec {
            FamilySpec::Uniform => PerturbationFamily::Uniform,
            FamilySpec::Sequential { links } => PerturbationFamily::Sequential(
                links
                    .iter()
                    .map(|id| network.link_by_name(id).ok_or_else(|| GraphError::UnknownLink(id.clone())))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}
