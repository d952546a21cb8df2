//! Property checks over trajectories: l1 contraction, order preservation and
//! the sign inequality behind them, plus seeded random instances to run them
//! on.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cuts::min_cut_capacity;
use crate::dynamics::{self, DynamicsError, IntegrationConfig, Trajectory};
use crate::graph::{Bound, Network, NetworkBuilder};
use crate::routing::{RoutingPolicy, SoftmaxPolicy};

/// Seed of instance `index` of a run seeded with `seed`.
pub fn instance_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomNetworkConfig {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Links added on top of the spanning chain, at most.
    pub max_extra_links: usize,
    pub capacity: (f64, f64),
    /// Round capacities and inflows to multiples of 1/4, so that cut
    /// arithmetic is exact.
    pub dyadic: bool,
    pub unbounded_buffer_prob: f64,
    pub buffer: (f64, f64),
    pub inflow: (f64, f64),
    /// Probability that a non-first, non-destination node also gets inflow.
    pub extra_origin_prob: f64,
    /// Scale inflows down so that the total is at most this fraction of the
    /// min-cut capacity.
    pub max_load: Option<f64>,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        RandomNetworkConfig {
            min_nodes: 3,
            max_nodes: 8,
            max_extra_links: 8,
            capacity: (0.5, 3.0),
            dyadic: false,
            unbounded_buffer_prob: 0.3,
            buffer: (1.0, 5.0),
            inflow: (0.2, 2.0),
            extra_origin_prob: 0.3,
            max_load: Some(0.8),
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), dyadic: bool) -> f64 {
    let x = if hi > lo { rng.random_range(lo..hi) } else { lo };
    if dyadic {
        let q = libm::round(x * 4.0) / 4.0;
        if q > 0.0 {
            q
        } else {
            0.25
        }
    } else {
        x
    }
}

/// A random valid network: nodes `n0 .. n{k-1}` on a chain ending at the
/// destination `n{k-1}`, plus random extra links (cycles allowed); `n0`
/// always has inflow.
pub fn random_network(seed: u64, cfg: &RandomNetworkConfig) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = cfg.min_nodes.max(2);
    let n = if cfg.max_nodes > lo { rng.random_range(lo..=cfg.max_nodes) } else { lo };
    let mut b = NetworkBuilder::new();
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    for name in &names {
        b = b.node(name);
    }
    let mut pairs: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let extra = if cfg.max_extra_links > 0 { rng.random_range(0..=cfg.max_extra_links) } else { 0 };
    for _ in 0..extra {
        let u = rng.random_range(0..n - 1);
        let mut v = rng.random_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        pairs.push((u, v));
    }
    for (i, (u, v)) in pairs.into_iter().enumerate() {
        let capacity = Bound::Finite(draw(&mut rng, cfg.capacity, cfg.dyadic));
        let buffer = if rng.random_bool(cfg.unbounded_buffer_prob.clamp(0.0, 1.0)) {
            Bound::Unbounded
        } else {
            Bound::Finite(draw(&mut rng, cfg.buffer, false))
        };
        b = b.link(&format!("e{i}"), &names[u], &names[v], capacity, buffer);
    }
    b = b.inflow(&names[0], draw(&mut rng, cfg.inflow, cfg.dyadic));
    for name in &names[1..n - 1] {
        if rng.random_bool(cfg.extra_origin_prob.clamp(0.0, 1.0)) {
            b = b.inflow(name, draw(&mut rng, cfg.inflow, cfg.dyadic));
        }
    }
    let network = b.build().expect("generated networks are well formed");
    match cfg.max_load {
        Some(load) => {
            let cap = min_cut_capacity(&network).expect("generated networks have an origin");
            let total = network.total_inflow();
            if total > load * cap {
                let k = load * cap / total;
                network.with_inflows(network.inflows().iter().map(|l| l * k).collect())
            } else {
                network
            }
        }
        None => network,
    }
}

/// Softmax policy with per-link `beta` drawn from `[0.5, 2]`.
pub fn random_softmax(network: &Network, seed: u64) -> SoftmaxPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = (0..network.link_count()).map(|_| rng.random_range(0.5..2.0)).collect();
    SoftmaxPolicy::new(network, beta).expect("positive betas and finite capacities")
}

/// Upper end of the sampling box of each link: `B_e / 2`, or `2` for
/// unbounded buffers. Starting closer to the buffers makes congested
/// networks creep towards them, which is slow to integrate.
fn box_upper(network: &Network) -> Vec<f64> {
    network
        .links()
        .iter()
        .map(|l| match l.buffer {
            Bound::Finite(b) => 0.5 * b,
            Bound::Unbounded => 2.0,
        })
        .collect()
}

/// A uniform random state in the sampling box.
pub fn random_state(network: &Network, rng: &mut impl Rng) -> Vec<f64> {
    box_upper(network).into_iter().map(|u| rng.random_range(0.0..1.0) * u).collect()
}

/// Two random states `low <= high` componentwise.
pub fn random_ordered_pair(network: &Network, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let upper = box_upper(network);
    let mut low = Vec::with_capacity(upper.len());
    let mut high = Vec::with_capacity(upper.len());
    for u in upper {
        let a = rng.random_range(0.0..1.0) * u;
        let b = rng.random_range(0.0..1.0) * u;
        low.push(a.min(b));
        high.push(a.max(b));
    }
    (low, high)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyConfig {
    pub horizon: f64,
    /// Both trajectories are sampled on this grid.
    pub sample_interval: f64,
    pub integration: IntegrationConfig,
    /// Allowed increase of the l1 distance is `tol_contraction * (1 + phi(0))`.
    pub tol_contraction: f64,
    /// Require strict decrease while the distance exceeds this.
    pub strict_threshold: f64,
    /// Only enforced for policies known to be strongly monotone.
    pub strict: bool,
    pub tol_order: f64,
    /// Components closer than this count as equal in the sign sum.
    pub sign_zero: f64,
    pub tol_sign: f64,
}

impl Default for PropertyConfig {
    fn default() -> Self {
        PropertyConfig {
            horizon: 20.0,
            sample_interval: 0.1,
            integration: IntegrationConfig { rtol: 1e-10, atol: 1e-12, tol_buffer: 1e-3, ..IntegrationConfig::default() },
            tol_contraction: 1e-7,
            strict_threshold: 1e-6,
            strict: true,
            tol_order: 1e-8,
            sign_zero: 1e-12,
            tol_sign: 1e-10,
        }
    }
}

impl PropertyConfig {
    fn integration(&self) -> IntegrationConfig {
        IntegrationConfig {
            t_max: self.integration.t0 + self.horizon,
            sample_interval: Some(self.sample_interval),
            stop_at_equilibrium: false,
            ..self.integration.clone()
        }
    }
}

/// Integrates from both states and returns the trajectories and the number
/// of leading samples they share (a buffer hit ends either one early).
fn paired(
    network: &Network,
    policy: &(impl RoutingPolicy + ?Sized),
    a: &[f64],
    b: &[f64],
    cfg: &PropertyConfig,
) -> Result<(Trajectory, Trajectory, usize, Option<f64>), DynamicsError> {
    let icfg = cfg.integration();
    let ta = dynamics::integrate(network, policy, a, &icfg)?;
    let tb = dynamics::integrate(network, policy, b, &icfg)?;
    let mut shared = 0;
    while shared < ta.len() && shared < tb.len() && ta.times[shared] == tb.times[shared] {
        shared += 1;
    }
    let truncated = match (ta.termination.kappa_interval(), tb.termination.kappa_interval()) {
        (None, None) => None,
        (x, y) => Some(x.map_or(f64::INFINITY, |i| i.0).min(y.map_or(f64::INFINITY, |i| i.0))),
    };
    Ok((ta, tb, shared, truncated))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// `phi(t) = |rho_a(t) - rho_b(t)|_1` on the shared samples.
    pub phi: Vec<f64>,
    /// Largest `phi(t_{i+1}) - phi(t_i)`.
    pub max_increase: f64,
    pub increases: usize,
    /// Steps where `phi` exceeded the strict threshold and did not decrease.
    pub stalls: usize,
    /// Earliest buffer-hit time, when a run ended early.
    pub truncated_at: Option<f64>,
    pub passed: bool,
}

pub fn check_l1_contraction<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    a: &[f64],
    b: &[f64],
    cfg: &PropertyConfig,
) -> Result<ContractionReport, DynamicsError> {
    let (ta, tb, shared, truncated_at) = paired(network, policy, a, b, cfg)?;
    let phi: Vec<f64> = (0..shared)
        .map(|i| ta.states[i].iter().zip(&tb.states[i]).map(|(x, y)| (x - y).abs()).sum())
        .collect();
    let tol = cfg.tol_contraction * (1.0 + phi.first().copied().unwrap_or(0.0));
    let mut max_increase = f64::NEG_INFINITY;
    let (mut increases, mut stalls) = (0, 0);
    for w in phi.windows(2) {
        let d = w[1] - w[0];
        max_increase = max_increase.max(d);
        if d > tol {
            increases += 1;
        }
        if cfg.strict && w[0] > cfg.strict_threshold && !(w[1] < w[0]) {
            stalls += 1;
        }
    }
    if phi.len() < 2 {
        max_increase = 0.0;
    }
    Ok(ContractionReport {
        times: ta.times[..shared].to_vec(),
        phi,
        max_increase,
        increases,
        stalls,
        truncated_at,
        passed: increases == 0 && stalls == 0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderReport {
    pub samples: usize,
    /// Largest `rho_low,e(t) - rho_high,e(t)` over links and samples.
    pub max_violation: f64,
    pub violations: usize,
    pub truncated_at: Option<f64>,
    pub passed: bool,
}

/// Order preservation from `low <= high`.
pub fn check_order_preservation<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    low: &[f64],
    high: &[f64],
    cfg: &PropertyConfig,
) -> Result<OrderReport, DynamicsError> {
    if low.iter().zip(high).any(|(l, h)| l > h) {
        return Err(DynamicsError::InvalidState(String::from("initial states are not ordered")));
    }
    let (tl, th, shared, truncated_at) = paired(network, policy, low, high, cfg)?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 0..shared {
        for (l, h) in tl.states[i].iter().zip(&th.states[i]) {
            let d = l - h;
            max_violation = max_violation.max(d);
            if d > cfg.tol_order * (1.0 + h.abs()) {
                violations += 1;
            }
        }
    }
    Ok(OrderReport { samples: shared, max_violation, violations, truncated_at, passed: violations == 0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignReport {
    pub pairs: usize,
    /// Largest `sum_i sgn(x_i - y_i) (g_i(x) - g_i(y))`.
    pub max_sum: f64,
    pub violations: usize,
    /// Pairs with `x != y` whose sum was not negative.
    pub not_strict: usize,
    pub errors: Vec<DynamicsError>,
    pub passed: bool,
}

/// `sum_i sgn(x_i - y_i) (g_i(x) - g_i(y))` with `g` the right-hand side.
pub fn sign_sum<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    x: &[f64],
    y: &[f64],
    zero: f64,
) -> Result<f64, DynamicsError> {
    let gx = dynamics::rhs(network, policy, x)?;
    let gy = dynamics::rhs(network, policy, y)?;
    Ok((0..x.len())
        .map(|i| {
            let d = x[i] - y[i];
            if d.abs() < zero {
                0.0
            } else {
                d.signum() * (gx[i] - gy[i])
            }
        })
        .sum())
}

pub fn check_sign_inequality<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    pairs: &[(Vec<f64>, Vec<f64>)],
    cfg: &PropertyConfig,
) -> SignReport {
    let mut max_sum = f64::NEG_INFINITY;
    let (mut violations, mut not_strict) = (0, 0);
    let mut errors = Vec::new();
    for (x, y) in pairs {
        match sign_sum(network, policy, x, y, cfg.sign_zero) {
            Ok(s) => {
                max_sum = max_sum.max(s);
                if s > cfg.tol_sign {
                    violations += 1;
                }
                let distinct = x.iter().zip(y).any(|(a, b)| (a - b).abs() >= cfg.sign_zero);
                if cfg.strict && distinct && !(s < 0.0) {
                    not_strict += 1;
                }
            }
            Err(e) => errors.push(e),
        }
    }
    if pairs.is_empty() {
        max_sum = 0.0;
    }
    SignReport {
        pairs: pairs.len(),
        max_sum,
        violations,
        not_strict,
        passed: violations == 0 && not_strict == 0 && errors.is_empty(),
        errors,
    }
}

/// Which check a suite runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Contraction,
    Order,
    Sign,
}

impl Property {
    pub fn label(self) -> &'static str {
        match self {
            Property::Contraction => "contraction",
            Property::Order => "order",
            Property::Sign => "sign",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceOutcome {
    pub index: usize,
    pub seed: u64,
    pub passed: bool,
    /// Worst observed value: largest phi increase, order violation or sign
    /// sum.
    pub worst: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub property: Property,
    pub seed: u64,
    pub outcomes: Vec<InstanceOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InstanceOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

/// Runs `property` once on `network` and `policy`, with states drawn from
/// `seed`.
pub fn run_instance<P: RoutingPolicy + ?Sized>(
    property: Property,
    network: &Network,
    policy: &P,
    index: usize,
    seed: u64,
    sign_pairs: usize,
    cfg: &PropertyConfig,
) -> InstanceOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (passed, worst, detail) = match property {
        Property::Contraction => {
            let a = random_state(network, &mut rng);
            let b = random_state(network, &mut rng);
            match check_l1_contraction(network, policy, &a, &b, cfg) {
                Ok(r) => {
                    let detail = format!(
                        "phi {:.3e} -> {:.3e}, max increase {:.3e}, {} increases, {} stalls{}",
                        r.phi.first().copied().unwrap_or(0.0),
                        r.phi.last().copied().unwrap_or(0.0),
                        r.max_increase,
                        r.increases,
                        r.stalls,
                        truncation(r.truncated_at)
                    );
                    (r.passed, r.max_increase, detail)
                }
                Err(e) => (false, f64::NAN, format!("{e}")),
            }
        }
        Property::Order => {
            let (low, high) = random_ordered_pair(network, &mut rng);
            match check_order_preservation(network, policy, &low, &high, cfg) {
                Ok(r) => {
                    let detail = format!(
                        "{} samples, max violation {:.3e}, {} violations{}",
                        r.samples,
                        r.max_violation,
                        r.violations,
                        truncation(r.truncated_at)
                    );
                    (r.passed, r.max_violation, detail)
                }
                Err(e) => (false, f64::NAN, format!("{e}")),
            }
        }
        Property::Sign => {
            let pairs: Vec<_> =
                (0..sign_pairs).map(|_| (random_state(network, &mut rng), random_state(network, &mut rng))).collect();
            let r = check_sign_inequality(network, policy, &pairs, cfg);
            let detail = format!(
                "{} pairs, max sum {:.3e}, {} violations, {} not strict, {} errors",
                r.pairs,
                r.max_sum,
                r.violations,
                r.not_strict,
                r.errors.len()
            );
            (r.passed, r.max_sum, detail)
        }
    };
    InstanceOutcome { index, seed, passed, worst, detail }
}

fn truncation(t: Option<f64>) -> String {
    t.map(|t| format!(", truncated at buffer hit t = {t:.6}")).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub instances: usize,
    pub networks: RandomNetworkConfig,
    pub property: PropertyConfig,
    /// Pairs per instance for the sign suite.
    pub sign_pairs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            instances: 100,
            networks: RandomNetworkConfig::default(),
            property: PropertyConfig::default(),
            sign_pairs: 1000,
        }
    }
}

/// Instance `index` of a random suite: a random network with a random
/// softmax policy.
pub fn random_instance(cfg: &SuiteConfig, index: usize) -> (u64, Network, SoftmaxPolicy) {
    let seed = instance_seed(cfg.seed, index);
    let network = random_network(seed, &cfg.networks);
    let policy = random_softmax(&network, seed.wrapping_add(1));
    (seed, network, policy)
}

/// One instance of a random suite.
pub fn random_suite_instance(property: Property, cfg: &SuiteConfig, index: usize) -> InstanceOutcome {
    let (seed, network, policy) = random_instance(cfg, index);
    run_instance(property, &network, &policy, index, seed.wrapping_add(2), cfg.sign_pairs, &cfg.property)
}

/// `property` on `cfg.instances` random networks, one after the other.
pub fn random_suite(property: Property, cfg: &SuiteConfig) -> SuiteReport {
    let outcomes = (0..cfg.instances).map(|i| random_suite_instance(property, cfg, i)).collect();
    SuiteReport { property, seed: cfg.seed, outcomes }
}

/// `property` on a fixed network and policy, with `cfg.instances` random
/// initial states.
pub fn network_suite<P: RoutingPolicy + ?Sized>(
    property: Property,
    network: &Network,
    policy: &P,
    cfg: &SuiteConfig,
) -> SuiteReport {
    let outcomes = (0..cfg.instances)
        .map(|i| run_instance(property, network, policy, i, instance_seed(cfg.seed, i), cfg.sign_pairs, &cfg.property))
        .collect();
    SuiteReport { property, seed: cfg.seed, outcomes }
}
