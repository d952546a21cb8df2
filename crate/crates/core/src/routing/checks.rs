//! Sampled checks of the routing axioms and of (strong) monotonicity.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LocalDensity, PolicyError, RoutingPolicy};
use crate::graph::{Bound, LinkId, Network, Source, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axiom {
    /// Origin links send exactly their inflow.
    Origin,
    /// An empty link sends nothing.
    EmptyLink,
    /// A link at its buffer discharges at capacity.
    CongestedSelf,
    /// Nothing is sent into a link at its buffer.
    CongestedDownstream,
    /// Flows are non-negative and total outflow is at most capacity.
    Feasibility,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::Origin,
        Axiom::EmptyLink,
        Axiom::CongestedSelf,
        Axiom::CongestedDownstream,
        Axiom::Feasibility,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Axiom::Origin => "origin",
            Axiom::EmptyLink => "empty-link",
            Axiom::CongestedSelf => "congested-self",
            Axiom::CongestedDownstream => "congested-downstream",
            Axiom::Feasibility => "feasibility",
        }
    }
}

/// Configuration of [`check_axioms`].
///
/// Unbounded buffers are tested in limit form: the density is raised from
/// `unbounded_level` by factors of 4, at most `unbounded_steps` times, and
/// the axiom holds if it is met at some level up to `unbounded_eps` times
/// the link capacity (or inflow).
#[derive(Clone, Debug)]
pub struct AxiomCheck {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub unbounded_level: f64,
    pub unbounded_eps: f64,
    pub unbounded_steps: usize,
    /// Random densities on unbounded links are drawn from `[0, unbounded_scale]`.
    pub unbounded_scale: f64,
}

impl Default for AxiomCheck {
    fn default() -> Self {
        AxiomCheck { samples: 1000, tol: 1e-9, seed: 0, unbounded_level: 50.0, unbounded_eps: 1e-3, unbounded_steps: 8, unbounded_scale: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomResult {
    pub axiom: Axiom,
    /// Number of policy evaluations that tested this axiom.
    pub evaluations: usize,
    pub max_violation: f64,
    pub worst: Option<Source>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub results: Vec<AxiomResult>,
    /// Evaluation errors at points inside the policy domain.
    pub errors: Vec<(Source, PolicyError)>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.results.iter().all(|r| r.passed)
    }

    pub fn result(&self, axiom: Axiom) -> &AxiomResult {
        self.results.iter().find(|r| r.axiom == axiom).expect("every axiom is reported")
    }
}

struct Tally {
    evaluations: usize,
    max: f64,
    worst: Option<Source>,
}

impl Tally {
    fn record(&mut self, source: Source, violation: f64) {
        self.evaluations += 1;
        // NaN counts as a violation
        if !(violation <= self.max) {
            self.max = violation;
            self.worst = Some(source);
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, bound: Bound, lo: f64, hi: f64, unbounded_hi: f64) -> f64 {
    match bound {
        Bound::Finite(b) => b * rng.random_range(lo..hi),
        Bound::Unbounded => rng.random_range(lo.min(unbounded_hi)..unbounded_hi),
    }
}

fn downstream_links(targets: &[Target]) -> Vec<LinkId> {
    targets
        .iter()
        .filter_map(|t| match t {
            Target::Link(k) => Some(*k),
            Target::Exit => None,
        })
        .collect()
}

/// Evaluates `policy` at random and boundary points of every sender's
/// domain and reports the largest violation of each axiom.
pub fn check_axioms<P: RoutingPolicy + ?Sized>(policy: &P, network: &Network, cfg: &AxiomCheck) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tallies: Vec<Tally> = Axiom::ALL.iter().map(|_| Tally { evaluations: 0, max: 0.0, worst: None }).collect();
    let mut errors = Vec::new();
    let mut out = Vec::new();
    let mut down = Vec::new();
    let level = cfg.unbounded_level;

    for &source in network.sources() {
        let targets = network.targets(source);
        let links = downstream_links(targets);
        out.clear();
        out.resize(targets.len(), 0.0);
        let (own_bound, cap) = match source {
            Source::Link(e) => (Some(network.buffer(e)), network.capacity(e).finite()),
            Source::Origin(v) => (None, Some(network.inflow(v))),
        };
        let scale = cap.unwrap_or(1.0).max(f64::MIN_POSITIVE);
        for _ in 0..cfg.samples {
            let mut own = own_bound.map(|b| draw(&mut rng, b, 0.0, 1.0, cfg.unbounded_scale));
            down.clear();
            down.extend(links.iter().map(|&k| draw(&mut rng, network.buffer(k), 0.0, 1.0, cfg.unbounded_scale)));

            macro_rules! eval {
                ($own:expr) => {
                    match evaluate(policy, network, source, $own, targets, &down, &mut out, cap) {
                        Ok((total, infeasible)) => {
                            tallies[4].record(source, infeasible);
                            Some(total)
                        }
                        Err(err) => {
                            errors.push((source, err));
                            None
                        }
                    }
                };
            }

            // random interior point
            let Some(total) = eval!(own) else { continue };
            if let Source::Origin(_) = source {
                tallies[0].record(source, (total - scale).abs());
                // congested downstream for origins: one random link at its buffer
                if links.len() > 1 {
                    let i = rng.random_range(0..links.len());
                    let saved = down[i];
                    let mut worst = None;
                    for k in 0..levels(network.buffer(links[i]), cfg) {
                        down[i] = network.buffer(links[i]).finite().unwrap_or(level_at(level, k));
                        let Some(_) = eval!(own) else { break };
                        let v = downstream_violation(network, links[i], out[i], scale, cfg);
                        worst = Some(v);
                        if v <= cfg.tol {
                            break;
                        }
                    }
                    if let Some(v) = worst {
                        tallies[3].record(source, v);
                    }
                    down[i] = saved;
                }
                continue;
            }
            let own_bound = own_bound.expect("links carry density");

            if let Some(total) = eval!(Some(0.0)) {
                tallies[1].record(source, total.abs());
            }

            if let Some(c) = cap {
                let mut worst = None;
                for k in 0..levels(own_bound, cfg) {
                    let at = own_bound.finite().unwrap_or(level_at(level, k));
                    let Some(total) = eval!(Some(at)) else { break };
                    let v = match own_bound {
                        Bound::Finite(_) => (c - total).abs(),
                        Bound::Unbounded => (c * (1.0 - cfg.unbounded_eps) - total).max(0.0),
                    };
                    worst = Some(v);
                    if v <= cfg.tol {
                        break;
                    }
                }
                if let Some(v) = worst {
                    tallies[2].record(source, v);
                }
            }

            if !links.is_empty() {
                let i = rng.random_range(0..links.len());
                let saved = down[i];
                // keep away from the excluded point
                if own_bound.finite().is_some_and(|b| own.is_some_and(|r| r >= b)) {
                    own = Some(0.0);
                }
                let pos = targets.iter().position(|t| *t == Target::Link(links[i])).expect("target present");
                let mut worst = None;
                for k in 0..levels(network.buffer(links[i]), cfg) {
                    down[i] = network.buffer(links[i]).finite().unwrap_or(level_at(level, k));
                    let Some(_) = eval!(own) else { break };
                    let v = downstream_violation(network, links[i], out[pos], scale, cfg);
                    worst = Some(v);
                    if v <= cfg.tol {
                        break;
                    }
                }
                if let Some(v) = worst {
                    tallies[3].record(source, v);
                }
                down[i] = saved;
            }
        }
    }

    let results = Axiom::ALL
        .iter()
        .zip(tallies)
        .map(|(&axiom, t)| AxiomResult {
            axiom,
            evaluations: t.evaluations,
            max_violation: t.max,
            worst: t.worst,
            passed: t.max <= cfg.tol,
        })
        .collect();
    AxiomReport { results, errors }
}

fn level_at(level: f64, k: i32) -> f64 {
    level * (1u64 << (2 * k.clamp(0, 30))) as f64
}

/// Densities tried on an unbounded link: `unbounded_level * 4^k` for
/// `k < unbounded_steps`. A finite buffer is tried once.
fn levels(bound: Bound, cfg: &AxiomCheck) -> i32 {
    match bound {
        Bound::Finite(_) => 1,
        Bound::Unbounded => cfg.unbounded_steps.max(1) as i32,
    }
}

/// Total outflow and the feasibility violation at one point.
#[allow(clippy::too_many_arguments)]
fn evaluate<P: RoutingPolicy + ?Sized>(
    policy: &P,
    network: &Network,
    source: Source,
    own: Option<f64>,
    targets: &[Target],
    down: &[f64],
    out: &mut [f64],
    cap: Option<f64>,
) -> Result<(f64, f64), PolicyError> {
    let local = LocalDensity { source, own, targets, downstream: down };
    policy.write_split(network, &local, out)?;
    let total: f64 = out.iter().sum();
    let neg = out.iter().fold(0.0f64, |m, f| m.max(-f));
    let over = cap.map_or(0.0, |c| (total - c).max(0.0));
    Ok((total, neg.max(over)))
}

fn downstream_violation(network: &Network, k: LinkId, flow: f64, scale: f64, cfg: &AxiomCheck) -> f64 {
    match network.buffer(k) {
        Bound::Finite(_) => flow.abs(),
        Bound::Unbounded => (flow - cfg.unbounded_eps * scale).max(0.0),
    }
}

/// Configuration of [`check_monotonicity`].
#[derive(Clone, Debug)]
pub struct MonotonicityCheck {
    pub samples: usize,
    /// Central-difference step; defaults to `1e-5 * min(finite buffers, 1)`.
    pub fd_step: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    /// Interior points on finite buffers are drawn from
    /// `[interior.0 * B, interior.1 * B]`.
    pub interior: (f64, f64),
    /// Upper end of the sampling range for unbounded buffers.
    pub unbounded_scale: f64,
    /// Keep at most this many violation records.
    pub max_records: usize,
}

impl Default for MonotonicityCheck {
    fn default() -> Self {
        MonotonicityCheck {
            samples: 200,
            fd_step: None,
            tol: 1e-8,
            seed: 0,
            interior: (0.01, 0.8),
            unbounded_scale: 4.0,
            max_records: 32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MonotonicityClass {
    NotMonotone,
    Monotone,
    /// Strict inequalities held at every sampled point. Sampled evidence,
    /// not a proof.
    StronglyMonotone,
}

impl MonotonicityClass {
    pub fn label(self) -> &'static str {
        match self {
            MonotonicityClass::NotMonotone => "not monotone",
            MonotonicityClass::Monotone => "monotone",
            MonotonicityClass::StronglyMonotone => "strongly monotone (sampled)",
        }
    }
}

/// Which partial derivative a record is about.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Partial {
    /// `d f_{e->target} / d rho_wrt`; must be non-negative.
    Split { target: Target, wrt: LinkId },
    /// `d f_out_e / d rho_wrt` for a downstream link; must be non-positive.
    Outflow { wrt: LinkId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityViolation {
    pub source: Source,
    pub partial: Partial,
    pub value: f64,
    /// Own density (if any) followed by the downstream densities.
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub class: MonotonicityClass,
    pub fd_step: f64,
    pub partials_checked: usize,
    pub violation_count: usize,
    pub violations: Vec<MonotonicityViolation>,
    /// Partials that were not strictly signed.
    pub non_strict_count: usize,
    /// Largest absolute partial seen: a Lipschitz estimate.
    pub lipschitz_estimate: f64,
    pub errors: Vec<(Source, PolicyError)>,
}

/// Default finite-difference step for a network.
pub fn default_fd_step(network: &Network) -> f64 {
    let min_b = network
        .links()
        .iter()
        .filter_map(|l| l.buffer.finite())
        .fold(1.0f64, f64::min);
    1e-5 * min_b
}

/// Central-difference estimates of every partial in the monotonicity
/// conditions at random interior points.
pub fn check_monotonicity<P: RoutingPolicy + ?Sized>(
    policy: &P,
    network: &Network,
    cfg: &MonotonicityCheck,
) -> MonotonicityReport {
    let h = cfg.fd_step.unwrap_or_else(|| default_fd_step(network));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = MonotonicityReport {
        class: MonotonicityClass::StronglyMonotone,
        fd_step: h,
        partials_checked: 0,
        violation_count: 0,
        violations: Vec::new(),
        non_strict_count: 0,
        lipschitz_estimate: 0.0,
        errors: Vec::new(),
    };
    let (lo, hi) = cfg.interior;

    for &source in network.sources() {
        let targets = network.targets(source);
        let links = downstream_links(targets);
        let own_link = match source {
            Source::Link(e) => Some(e),
            Source::Origin(_) => None,
        };
        // variables: own density first (if any), then downstream densities
        let vars: Vec<LinkId> = own_link.into_iter().chain(links.iter().copied()).collect();
        let n_own = usize::from(own_link.is_some());
        let mut point = vec![0.0; vars.len()];
        let mut plus = vec![0.0; targets.len()];
        let mut minus = vec![0.0; targets.len()];

        'sample: for _ in 0..cfg.samples {
            for (x, &k) in point.iter_mut().zip(&vars) {
                *x = draw(&mut rng, network.buffer(k), lo, hi, cfg.unbounded_scale);
            }
            for (vi, &k) in vars.iter().enumerate() {
                let mut p = point.clone();
                p[vi] = point[vi] + h;
                let lp = LocalDensity {
                    source,
                    own: own_link.map(|_| p[0]),
                    targets,
                    downstream: &p[n_own..],
                };
                if let Err(e) = policy.write_split(network, &lp, &mut plus) {
                    report.errors.push((source, e));
                    continue 'sample;
                }
                let mut m = point.clone();
                m[vi] = point[vi] - h;
                let lm = LocalDensity {
                    source,
                    own: own_link.map(|_| m[0]),
                    targets,
                    downstream: &m[n_own..],
                };
                if let Err(e) = policy.write_split(network, &lm, &mut minus) {
                    report.errors.push((source, e));
                    continue 'sample;
                }
                let mut outflow = 0.0;
                for (j, t) in targets.iter().enumerate() {
                    let d = (plus[j] - minus[j]) / (2.0 * h);
                    outflow += d;
                    report.lipschitz_estimate = report.lipschitz_estimate.max(d.abs());
                    if *t == Target::Link(k) {
                        continue;
                    }
                    report.partials_checked += 1;
                    let partial = Partial::Split { target: *t, wrt: k };
                    if d < -cfg.tol || d.is_nan() {
                        record(&mut report, cfg, source, partial, d, &point);
                    } else if d <= cfg.tol {
                        report.non_strict_count += 1;
                    }
                }
                let downstream = vi >= n_own;
                if downstream {
                    report.partials_checked += 1;
                    let partial = Partial::Outflow { wrt: k };
                    if outflow > cfg.tol || outflow.is_nan() {
                        record(&mut report, cfg, source, partial, outflow, &point);
                    } else if outflow >= -cfg.tol && own_link.is_some() {
                        // origins send a constant total, which is never strict
                        report.non_strict_count += 1;
                    }
                }
            }
        }
    }
    report.class = if report.violation_count > 0 || !report.errors.is_empty() {
        MonotonicityClass::NotMonotone
    } else if report.non_strict_count > 0 {
        MonotonicityClass::Monotone
    } else {
        MonotonicityClass::StronglyMonotone
    };
    report
}

fn record(
    report: &mut MonotonicityReport,
    cfg: &MonotonicityCheck,
    source: Source,
    partial: Partial,
    value: f64,
    point: &[f64],
) {
    report.violation_count += 1;
    if report.violations.len() < cfg.max_records {
        report.violations.push(MonotonicityViolation { source, partial, value, point: point.to_vec() });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::motivating_network;
    use crate::routing::{MotivatingPolicy, RoutingMatrix, SoftmaxPolicy};

    /// Sends twice the capacity out of every link.
    struct Greedy;

    impl RoutingPolicy for Greedy {
        fn write_split(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) -> Result<(), PolicyError> {
            let total = match local.source {
                Source::Origin(v) => network.inflow(v),
                Source::Link(e) => 2.0 * network.capacity(e).as_f64() * local.own.unwrap_or(0.0),
            };
            let n = out.len() as f64;
            out.iter_mut().for_each(|f| *f = total / n);
            Ok(())
        }
    }

    /// Softmax with the sign of the downstream preference flipped:
    /// sends more into fuller links.
    struct Attracted(SoftmaxPolicy);

    impl RoutingPolicy for Attracted {
        fn write_split(&self, network: &Network, local: &LocalDensity<'_>, out: &mut [f64]) -> Result<(), PolicyError> {
            let flipped: Vec<f64> = local
                .targets
                .iter()
                .filter_map(|t| match t {
                    Target::Link(k) => Some(*k),
                    Target::Exit => None,
                })
                .zip(local.downstream)
                .map(|(k, r)| match network.buffer(k) {
                    Bound::Finite(b) => b - r,
                    Bound::Unbounded => 1.0 / (1.0 + r),
                })
                .collect();
            let l = LocalDensity { downstream: &flipped, ..*local };
            self.0.write_split(network, &l, out)
        }
    }

    #[test]
    fn softmax_satisfies_axioms() {
        for buffer in [Bound::Finite(2.0), Bound::Unbounded] {
            let net = motivating_network(buffer);
            let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
            let report = check_axioms(&p, &net, &AxiomCheck::default());
            assert!(report.passed(), "{report:?}");
            assert!(report.results.iter().all(|r| r.evaluations > 0));
        }
    }

    #[test]
    fn softmax_axioms_with_mixed_buffers() {
        use crate::properties::{instance_seed, random_network, RandomNetworkConfig};
        let cfg = RandomNetworkConfig { unbounded_buffer_prob: 0.5, ..Default::default() };
        for i in 0..20 {
            let net = random_network(instance_seed(7, i), &cfg);
            let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
            let report = check_axioms(&p, &net, &AxiomCheck { samples: 50, ..Default::default() });
            assert!(report.passed(), "instance {i}: {report:?}");
        }
    }

    #[test]
    fn over_capacity_is_reported() {
        let net = motivating_network(Bound::Finite(2.0));
        let report = check_axioms(&Greedy, &net, &AxiomCheck { samples: 50, ..Default::default() });
        assert!(!report.result(Axiom::Feasibility).passed);
        assert!(!report.result(Axiom::CongestedSelf).passed);
        assert!(report.result(Axiom::EmptyLink).passed);
    }

    #[test]
    fn fixed_matrix_ignores_congested_downstream() {
        let net = motivating_network(Bound::Finite(2.0));
        let p = MotivatingPolicy::new(&net, RoutingMatrix::Fixed).unwrap();
        let report = check_axioms(&p, &net, &AxiomCheck { samples: 50, ..Default::default() });
        let r = report.result(Axiom::CongestedDownstream);
        assert!(!r.passed && r.max_violation > 0.1);
        assert!(report.result(Axiom::Origin).passed);
        assert!(report.result(Axiom::EmptyLink).passed);
    }

    #[test]
    fn softmax_is_strongly_monotone() {
        for buffer in [Bound::Finite(1.0), Bound::Unbounded] {
            let net = motivating_network(buffer);
            let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
            let report = check_monotonicity(&p, &net, &MonotonicityCheck::default());
            assert_eq!(report.class, MonotonicityClass::StronglyMonotone, "{report:?}");
            assert!(report.lipschitz_estimate > 0.0 && report.lipschitz_estimate.is_finite());
        }
    }

    #[test]
    fn motivating_classes() {
        let net = motivating_network(Bound::Unbounded);
        let class = |m| {
            let p = MotivatingPolicy::new(&net, m).unwrap();
            check_monotonicity(&p, &net, &MonotonicityCheck::default()).class
        };
        assert_eq!(class(RoutingMatrix::Fixed), MonotonicityClass::Monotone);
        assert_eq!(class(RoutingMatrix::LocallyResponsive), MonotonicityClass::Monotone);
        assert_eq!(class(RoutingMatrix::FlowControl), MonotonicityClass::Monotone);
    }

    #[test]
    fn fixed_matrix_cross_partials_vanish() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::Fixed).unwrap();
        let report = check_monotonicity(&p, &net, &MonotonicityCheck { samples: 20, tol: 1e-12, ..Default::default() });
        assert_eq!(report.violation_count, 0);
    }

    #[test]
    fn planted_non_monotone_policy_is_caught() {
        let net = motivating_network(Bound::Finite(1.0));
        let p = Attracted(SoftmaxPolicy::uniform(&net, 1.0).unwrap());
        let report = check_monotonicity(&p, &net, &MonotonicityCheck { samples: 20, ..Default::default() });
        assert_eq!(report.class, MonotonicityClass::NotMonotone);
        assert!(report.violations.iter().any(|v| matches!(v.partial, Partial::Split { .. })));
    }
}
