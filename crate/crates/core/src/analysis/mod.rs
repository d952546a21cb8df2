//! Verdicts from trajectories and cut reports: equilibrium or overload,
//! link classification, overload cuts, hitting-time bounds, growth rates and
//! resilience.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cuts::{self, CutConfig, CutError, CutReport};
use crate::dynamics::{self, DynamicsError, IntegrationConfig, Stage, Termination, Trajectory};
use crate::graph::{cut_capacity, cut_inflow, cut_sets, Bound, Cut, LinkId, Network};
use crate::routing::{
    check_axioms, check_monotonicity, AxiomCheck, MonotonicityCheck, MonotonicityClass, RoutingPolicy,
};

mod classify;
pub mod fit;
mod resilience;

pub use classify::{classify_links, DensityTag, Growth, LinkClassification, LinkTag, Thresholds};
pub use resilience::{
    resilience_curve, PerturbationFamily, Resilience, ResilienceConfig, ResilienceCurve, ResiliencePoint,
};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("no violating cut: the bound is undefined")]
    NoViolatingCut,
    #[error("no link is classified as reaching its buffer")]
    NoBufferLinks,
    #[error("trailing window [{t0}, {t1}] is too short for a fit")]
    WindowTooShort { t0: f64, t1: f64 },
    #[error("initial state has {got} entries, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error("no equilibrium reached (run ended with {0})")]
    NoEquilibrium(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// A disagreement between link tags and the structure an overload cut must
/// have. Reported, never fatal.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    /// Some links reach their buffers but no node has all its out-links
    /// among them.
    EmptyCut,
    OutgoingNotBuffer(LinkId),
    BoundaryOutNotCapacity(LinkId),
    BoundaryInNotZero(LinkId),
    OtherNotBelow(LinkId),
    Inconclusive(LinkId),
    /// `lambda_S < C_S` by exact cut arithmetic.
    NotViolating { value: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyCut => write!(f, "links reach their buffers but the overload cut is empty"),
            Diagnostic::OutgoingNotBuffer(e) => write!(f, "out-link {} of the cut does not reach its buffer", e.0),
            Diagnostic::BoundaryOutNotCapacity(e) => {
                write!(f, "link {} leaving the cut does not run at capacity", e.0)
            }
            Diagnostic::BoundaryInNotZero(e) => write!(f, "link {} entering the cut has non-vanishing flow", e.0),
            Diagnostic::OtherNotBelow(e) => write!(f, "link {} outside the cut does not stay below its buffer", e.0),
            Diagnostic::Inconclusive(e) => write!(f, "link {} could not be classified", e.0),
            Diagnostic::NotViolating { value } => write!(f, "lambda_S - C_S = {value} < 0"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverloadCut {
    /// `S = {v not a destination : every out-link of v reaches its buffer}`.
    pub cut: Cut,
    pub inflow: f64,
    pub capacity: Bound,
    /// `lambda_S - C_S`.
    pub value: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl OverloadCut {
    pub fn is_consistent(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// The overload cut `S` of a classification, with structural checks.
pub fn overload_cut(classification: &LinkClassification, network: &Network) -> Result<OverloadCut, AnalysisError> {
    let buffer = classification.buffer_set();
    if buffer.is_empty() {
        return Err(AnalysisError::NoBufferLinks);
    }
    let in_b = |e: &LinkId| classification.tag(*e).density == DensityTag::Buffer;
    let members = network
        .non_destinations()
        .into_iter()
        .filter(|&v| network.out_links(v).iter().all(in_b));
    let cut = Cut::new(network, members).expect("members are non-destination nodes");

    let mut diagnostics = Vec::new();
    for t in &classification.links {
        if t.density == DensityTag::Inconclusive {
            diagnostics.push(Diagnostic::Inconclusive(t.link));
        }
    }
    if cut.is_empty() {
        diagnostics.push(Diagnostic::EmptyCut);
        return Ok(OverloadCut { cut, inflow: 0.0, capacity: Bound::Finite(0.0), value: 0.0, diagnostics });
    }
    let sets = cut_sets(network, &cut);
    for e in &sets.outgoing {
        if !in_b(e) {
            diagnostics.push(Diagnostic::OutgoingNotBuffer(*e));
        }
    }
    for e in &sets.boundary_out {
        if !classification.tag(*e).at_capacity {
            diagnostics.push(Diagnostic::BoundaryOutNotCapacity(*e));
        }
    }
    for e in &sets.boundary_in {
        let t = classification.tag(*e);
        if !(t.zero_inflow || t.zero_outflow) {
            diagnostics.push(Diagnostic::BoundaryInNotZero(*e));
        }
    }
    for t in &classification.links {
        let e = t.link;
        if !sets.outgoing.contains(&e) && !sets.boundary_in.contains(&e) && t.density == DensityTag::Buffer {
            diagnostics.push(Diagnostic::OtherNotBelow(e));
        }
    }
    let inflow = cut_inflow(network, &cut);
    let capacity = cut_capacity(network, &cut);
    let value = inflow - capacity.as_f64();
    if value < -cuts::tolerance(value) {
        diagnostics.push(Diagnostic::NotViolating { value });
    }
    Ok(OverloadCut { cut, inflow, capacity, value, diagnostics })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KappaBound {
    pub bound: f64,
    /// The violating cut attaining the bound.
    pub cut: Cut,
}

/// Upper bound on the first buffer-hitting time from `rho0`:
/// `min over violating U of sum_{e in E_U^+} (B_e - rho0_e) / (lambda_U - C_U)`.
///
/// Cuts with an unbounded buffer among their out-links do not contribute.
pub fn kappa_upper_bound(network: &Network, rho0: &[f64], cfg: &CutConfig) -> Result<KappaBound, AnalysisError> {
    if rho0.len() != network.link_count() {
        return Err(AnalysisError::StateLength { got: rho0.len(), expected: network.link_count() });
    }
    let records = cuts::violating_cuts(network, cfg)?;
    let mut best: Option<KappaBound> = None;
    for r in records {
        if r.value <= cuts::tolerance(r.value) {
            continue;
        }
        let mut room = 0.0;
        let mut finite = true;
        for e in cut_sets(network, &r.cut).outgoing {
            match network.buffer(e) {
                Bound::Finite(b) => room += b - rho0[e.0],
                Bound::Unbounded => finite = false,
            }
        }
        if !finite {
            continue;
        }
        let bound = room / r.value;
        if best.as_ref().is_none_or(|b| bound < b.bound) {
            best = Some(KappaBound { bound, cut: r.cut });
        }
    }
    best.ok_or(AnalysisError::NoViolatingCut)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRate {
    /// Least-squares slope of `sum_{e in E_U^+} rho_e` over the window.
    pub slope: f64,
    pub r2: f64,
    /// `lambda_U - C_U`.
    pub expected: f64,
    /// `|slope - expected| / |expected|` (absolute deviation if `expected` is 0).
    pub deviation: f64,
    pub window: (f64, f64),
    /// Links outside `E_U^+` and `∂_U^-`, which should converge.
    pub complement: Vec<LinkId>,
    /// Largest absolute trailing slope among the complement links.
    pub complement_drift: f64,
}

/// Growth rate of the total density on the out-links of `cut` over the
/// trailing `fraction` of the last stage.
pub fn growth_rate(
    traj: &Trajectory,
    cut: &Cut,
    network: &Network,
    fraction: f64,
    points: usize,
) -> Result<GrowthRate, AnalysisError> {
    let (t0, t1) = fit::trailing_window(traj, fraction);
    if !(t1 > t0) || traj.index_at(t0) + 1 >= traj.len() {
        return Err(AnalysisError::WindowTooShort { t0, t1 });
    }
    let sets = cut_sets(network, cut);
    let total: Vec<f64> = traj.states.iter().map(|s| sets.outgoing.iter().map(|e| s[e.0]).sum()).collect();
    let (ts, vs) = fit::resample(traj, &total, t0, t1, points);
    let f = fit::linear_fit(&ts, &vs).ok_or(AnalysisError::WindowTooShort { t0, t1 })?;
    let expected = cut_inflow(network, cut) - cut_capacity(network, cut).as_f64();
    let deviation = if expected != 0.0 { (f.slope - expected).abs() / expected.abs() } else { f.slope.abs() };

    let complement: Vec<LinkId> = (0..network.link_count())
        .map(LinkId)
        .filter(|e| !sets.outgoing.contains(e) && !sets.boundary_in.contains(e))
        .collect();
    let mut complement_drift: f64 = 0.0;
    for e in &complement {
        let (ts, vs) = fit::resample(traj, &traj.density(*e), t0, t1, points);
        if let Some(g) = fit::linear_fit(&ts, &vs) {
            complement_drift = complement_drift.max(g.slope.abs());
        }
    }
    Ok(GrowthRate { slope: f.slope, r2: f.r2, expected, deviation, window: (t0, t1), complement, complement_drift })
}

/// What the cut analysis predicts before simulating.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prediction {
    /// Every cut has spare capacity.
    Stable,
    /// Some cut is violating.
    Overload,
    /// The largest violation is zero.
    Critical,
}

impl Prediction {
    pub fn label(self) -> &'static str {
        match self {
            Prediction::Stable => "stable",
            Prediction::Overload => "overload",
            Prediction::Critical => "critical",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Equilibrium {
        rho: Vec<f64>,
        /// Total flow into destinations at `rho`.
        throughput: f64,
        /// `|rhs(rho)|_inf`.
        residual: f64,
    },
    OverloadFinite {
        cut: OverloadCut,
        kappa_interval: (f64, f64),
        bound: Option<KappaBound>,
        /// Every out-link of the cut is within `tol_buffer` of its buffer.
        saturated: bool,
    },
    OverloadInfinite {
        cut: OverloadCut,
        /// The simulated cut equals `U*` from the cut analysis.
        matches_u_star: bool,
        growth: GrowthRate,
    },
    Indeterminate {
        reason: String,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Equilibrium { .. } => "equilibrium",
            Verdict::OverloadFinite { .. } => "overload_finite",
            Verdict::OverloadInfinite { .. } => "overload_infinite",
            Verdict::Indeterminate { .. } => "indeterminate",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub integration: IntegrationConfig,
    pub thresholds: Thresholds,
    pub cuts: CutConfig,
    pub axioms: Option<AxiomCheck>,
    pub monotonicity: MonotonicityCheck,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            integration: IntegrationConfig::default(),
            thresholds: Thresholds::default(),
            cuts: CutConfig::default(),
            axioms: Some(AxiomCheck::default()),
            monotonicity: MonotonicityCheck::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub verdict: Verdict,
    pub prediction: Prediction,
    /// `max_U (lambda_U - C_U)` on the final network.
    pub best_value: f64,
    pub u_star: Cut,
    pub monotonicity: MonotonicityClass,
    /// `None` when the axiom check was skipped.
    pub axioms_passed: Option<bool>,
    pub classification: LinkClassification,
    /// The simulation matched the prediction of the cut analysis.
    pub agreement: bool,
    pub notes: Vec<String>,
    pub trajectory: Trajectory,
}

/// Cut analysis of `network` followed by a simulation from `rho0` and the
/// matching verdict.
pub fn dichotomy_verdict<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    rho0: &[f64],
    cfg: &AnalysisConfig,
) -> Result<AnalysisReport, AnalysisError> {
    let stages = [Stage { start: cfg.integration.t0, network }];
    dichotomy_verdict_staged(&stages, policy, rho0, cfg)
}

/// As [`dichotomy_verdict`], for a staged run; the prediction concerns the
/// network of the last stage.
pub fn dichotomy_verdict_staged<P: RoutingPolicy + ?Sized>(
    stages: &[Stage<'_>],
    policy: &P,
    rho0: &[f64],
    cfg: &AnalysisConfig,
) -> Result<AnalysisReport, AnalysisError> {
    let network = stages
        .last()
        .ok_or_else(|| AnalysisError::InvalidConfig(String::from("no stages")))?
        .network;
    if rho0.len() != network.link_count() {
        return Err(AnalysisError::StateLength { got: rho0.len(), expected: network.link_count() });
    }
    let report: CutReport = match cuts::enumerate_violations(network, &cfg.cuts) {
        Err(CutError::TooManyNodes { .. }) => cuts::maxflow_report(network)?,
        other => other?,
    };
    let prediction = if report.is_critical() {
        Prediction::Critical
    } else if report.is_violating() {
        Prediction::Overload
    } else {
        Prediction::Stable
    };
    let monotonicity = check_monotonicity(policy, network, &cfg.monotonicity).class;
    let axioms_passed = cfg.axioms.as_ref().map(|a| check_axioms(policy, network, a).passed());
    let mut notes = Vec::new();
    if axioms_passed == Some(false) {
        notes.push(String::from("the policy failed the sampled axiom check"));
    }

    let traj = dynamics::integrate_staged(stages, policy, rho0, &cfg.integration)?;
    let th = &cfg.thresholds;
    let classification = classify_links(&traj, network, th);

    let overload_expected = match prediction {
        Prediction::Stable => false,
        Prediction::Overload => true,
        Prediction::Critical => monotonicity == MonotonicityClass::StronglyMonotone,
    };

    let verdict = match (&traj.termination, prediction) {
        (Termination::EquilibriumDetected { .. }, _) | (Termination::ReachedTMax, Prediction::Stable) => {
            let rho = traj.final_state().to_vec();
            let residual = dynamics::rhs(network, policy, &rho)?.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let threshold = 10.0 * cfg.integration.equilibrium_threshold(network);
            if matches!(traj.termination, Termination::ReachedTMax) && residual > threshold {
                Verdict::Indeterminate {
                    reason: format!("no equilibrium detected by t = {} (residual {residual:e})", traj.t_end()),
                }
            } else {
                let throughput = traj.destination_outflow(network).last().copied().unwrap_or(0.0);
                Verdict::Equilibrium { rho, throughput, residual }
            }
        }
        (Termination::BufferHit { interval, .. }, _) => {
            let cut = overload_cut(&classification, network)?;
            let bound = match kappa_upper_bound(network, &traj.states[0], &cfg.cuts) {
                Ok(b) => Some(b),
                Err(AnalysisError::NoViolatingCut) => None,
                Err(e) => return Err(e),
            };
            let saturated = !cut.cut.is_empty()
                && cut_sets(network, &cut.cut).outgoing.iter().all(|e| match network.buffer(*e) {
                    Bound::Finite(b) => traj.final_state()[e.0] >= b - th.tol_buffer,
                    Bound::Unbounded => false,
                });
            if stages.len() > 1 && bound.is_some() {
                notes.push(String::from("the hitting-time bound assumes the run started on the final network"));
            }
            Verdict::OverloadFinite { cut, kappa_interval: *interval, bound, saturated }
        }
        (Termination::ReachedTMax, _) => {
            if !overload_expected {
                Verdict::Indeterminate {
                    reason: String::from("critical load under a policy not known to be strongly monotone"),
                }
            } else {
                match overload_cut(&classification, network) {
                    Ok(cut) => {
                        let matches_u_star = cut.cut == report.u_star;
                        let growth = growth_rate(&traj, &report.u_star, network, th.growth_window, th.fit_points)?;
                        Verdict::OverloadInfinite { cut, matches_u_star, growth }
                    }
                    Err(AnalysisError::NoBufferLinks) => Verdict::Indeterminate {
                        reason: String::from("no link detected as growing by the end of the run"),
                    },
                    Err(e) => return Err(e),
                }
            }
        }
    };

    let agreement = match (&verdict, prediction) {
        (Verdict::Equilibrium { .. }, p) => p == Prediction::Stable || (p == Prediction::Critical && !overload_expected),
        (Verdict::OverloadFinite { cut, .. }, _) => overload_expected && cut.value >= -cuts::tolerance(cut.value),
        (Verdict::OverloadInfinite { matches_u_star, .. }, _) => overload_expected && *matches_u_star,
        (Verdict::Indeterminate { .. }, p) => p == Prediction::Critical && !overload_expected,
    };
    if !agreement {
        notes.push(format!(
            "simulation ({}) disagrees with the cut analysis ({})",
            verdict.label(),
            prediction.label()
        ));
    }
    Ok(AnalysisReport {
        verdict,
        prediction,
        best_value: report.best_value,
        u_star: report.u_star,
        monotonicity,
        axioms_passed,
        classification,
        agreement,
        notes,
        trajectory: traj,
    })
}

/// A random initial state: `U[0, 0.9 B_e)` on finite buffers, `U[0, 2)`
/// otherwise.
pub fn random_initial_state(network: &Network, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    network
        .links()
        .iter()
        .map(|l| match l.buffer {
            Bound::Finite(b) => rng.random_range(0.0..1.0) * 0.9 * b,
            Bound::Unbounded => rng.random_range(0.0..2.0),
        })
        .collect()
}

/// Spread of equilibria reached from different initial states.
#[derive(Clone, Debug, PartialEq)]
pub struct Consensus {
    pub states: Vec<Vec<f64>>,
    /// Largest componentwise difference between any two states.
    pub max_deviation: f64,
    /// `1e-5 * (1 + max |rho*|)`.
    pub tolerance: f64,
}

impl Consensus {
    pub fn from_states(states: Vec<Vec<f64>>) -> Consensus {
        let mut max_deviation: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (i, a) in states.iter().enumerate() {
            scale = a.iter().fold(scale, |m, x| m.max(x.abs()));
            for b in &states[i + 1..] {
                for (x, y) in a.iter().zip(b) {
                    max_deviation = max_deviation.max((x - y).abs());
                }
            }
        }
        Consensus { states, max_deviation, tolerance: 1e-5 * (1.0 + scale) }
    }

    pub fn agrees(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Integrates from each initial state until equilibrium and compares the
/// limits. Fails if some run ends without an equilibrium.
pub fn equilibrium_consensus<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    initial: &[Vec<f64>],
    cfg: &IntegrationConfig,
) -> Result<Consensus, AnalysisError> {
    let mut states = Vec::with_capacity(initial.len());
    for rho0 in initial {
        states.push(equilibrium_from(network, policy, rho0, cfg)?);
    }
    Ok(Consensus::from_states(states))
}

/// The equilibrium reached from `rho0`.
pub fn equilibrium_from<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    rho0: &[f64],
    cfg: &IntegrationConfig,
) -> Result<Vec<f64>, AnalysisError> {
    let mut cfg = cfg.clone();
    cfg.stop_at_equilibrium = true;
    let traj = dynamics::integrate(network, policy, rho0, &cfg)?;
    match traj.termination {
        Termination::EquilibriumDetected { .. } => Ok(traj.final_state().to_vec()),
        ref t => Err(AnalysisError::NoEquilibrium(t.label())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{link, motivating_network, perturbed_motivating};
    use crate::routing::{MotivatingPolicy, RoutingMatrix, SoftmaxPolicy};

    fn names(net: &Network, cut: &Cut) -> Vec<String> {
        cut.names(net)
    }

    #[test]
    fn kappa_bound_of_the_saturating_instance() {
        let net = perturbed_motivating(Bound::Finite(1.0), &[(3, 0.0), (4, 0.5)]);
        let k = kappa_upper_bound(&net, &[0.0; 5], &CutConfig::default()).unwrap();
        assert!((k.bound - 8.0).abs() < 1e-12);
        assert_eq!(names(&net, &k.cut), ["a", "b"]);
        let nominal = motivating_network(Bound::Finite(1.0));
        assert_eq!(kappa_upper_bound(&nominal, &[0.0; 5], &CutConfig::default()), Err(AnalysisError::NoViolatingCut));
    }

    #[test]
    fn kappa_bound_shrinks_with_initial_density() {
        let net = perturbed_motivating(Bound::Finite(1.0), &[(3, 0.0), (4, 0.5)]);
        let k = kappa_upper_bound(&net, &[0.5, 0.0, 0.5, 0.5, 0.0], &CutConfig::default()).unwrap();
        // {a}: lambda 2 - C 3 < 0; {a,b}: (0.5 + 1 + 0.5 + 0.5) / 0.5
        assert!((k.bound - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sub_critical_equilibrium() {
        let net = motivating_network(Bound::Finite(3.0));
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let r = dichotomy_verdict(&net, &p, &[0.0; 5], &AnalysisConfig::default()).unwrap();
        assert_eq!(r.prediction, Prediction::Stable);
        assert!(r.agreement, "{:?}", r.notes);
        match &r.verdict {
            Verdict::Equilibrium { throughput, residual, .. } => {
                assert!((throughput - 2.0).abs() < 1e-6);
                assert!(*residual < 1e-6);
            }
            v => panic!("unexpected verdict {v:?}"),
        }
        let c = r.classification;
        assert!(c.buffer_set().is_empty());
        assert_eq!(c.below_set().len(), 5);
    }

    #[test]
    fn equilibria_agree_across_initial_states() {
        let net = motivating_network(Bound::Finite(3.0));
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let starts: Vec<_> = (1..4).map(|s| random_initial_state(&net, s)).collect();
        for s in &starts {
            assert!(s.iter().all(|&r| (0.0..2.7).contains(&r)));
        }
        let cfg = IntegrationConfig { t_max: 1000.0, ..IntegrationConfig::default() };
        let c = equilibrium_consensus(&net, &p, &starts, &cfg).unwrap();
        assert!(c.agrees(), "{c:?}");
    }

    #[test]
    fn finite_overload_saturates_the_cut() {
        let net = perturbed_motivating(Bound::Finite(1.0), &[(3, 0.0), (4, 0.5)]);
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let r = dichotomy_verdict(&net, &p, &[0.0; 5], &AnalysisConfig::default()).unwrap();
        assert!(r.agreement, "{:?}", r.notes);
        match &r.verdict {
            Verdict::OverloadFinite { cut, kappa_interval, bound, saturated } => {
                assert_eq!(names(&net, &cut.cut), ["a", "b"]);
                assert!(cut.value > 0.0);
                assert!(*saturated);
                assert!(kappa_interval.1 <= bound.as_ref().unwrap().bound + 1e-3);
            }
            v => panic!("unexpected verdict {v:?}"),
        }
    }

    #[test]
    fn infinite_overload_grows_at_the_cut_rate() {
        let net = perturbed_motivating(Bound::Unbounded, &[(3, 0.0), (4, 0.0)]);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let mut cfg = AnalysisConfig::default();
        cfg.integration.t_max = 200.0;
        cfg.integration.sample_interval = Some(0.5);
        let r = dichotomy_verdict(&net, &p, &[0.0; 5], &cfg).unwrap();
        match &r.verdict {
            Verdict::OverloadInfinite { cut, matches_u_star, growth } => {
                assert_eq!(names(&net, &cut.cut), ["a", "b"]);
                assert!(*matches_u_star);
                assert!(growth.deviation < 0.05, "{growth:?}");
                assert_eq!(growth.complement, [link(5)]);
                assert!(growth.complement_drift < 1e-4);
            }
            v => panic!("unexpected verdict {v:?}"),
        }
        assert!(r.agreement);
    }

    #[test]
    fn critical_load_is_indeterminate_for_weak_monotonicity() {
        let net = perturbed_motivating(Bound::Unbounded, &[(3, 0.0)]);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let mut cfg = AnalysisConfig::default();
        cfg.integration.t_max = 200.0;
        cfg.integration.sample_interval = Some(0.5);
        let r = dichotomy_verdict(&net, &p, &[0.0; 5], &cfg).unwrap();
        assert_eq!(r.prediction, Prediction::Critical);
        assert_eq!(r.verdict.label(), "indeterminate");
        let c = r.classification;
        assert_eq!(c.buffer_set(), [link(1), link(2), link(3), link(4)]);
        assert_eq!(c.below_set(), [link(5)]);
    }

    #[test]
    fn overload_cut_structure() {
        let net = perturbed_motivating(Bound::Unbounded, &[(3, 0.0), (4, 0.0)]);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let mut cfg = IntegrationConfig::default();
        cfg.t_max = 200.0;
        let traj = dynamics::integrate(&net, &p, &[0.0; 5], &cfg).unwrap();
        let c = classify_links(&traj, &net, &Thresholds::default());
        let s = overload_cut(&c, &net).unwrap();
        assert!(s.is_consistent(), "{:?}", s.diagnostics);
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(c.capacity_set(), [link(2), link(3), link(4)]);
    }

    #[test]
    fn overload_cut_needs_buffer_links() {
        let net = motivating_network(Bound::Unbounded);
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let traj = dynamics::integrate(&net, &p, &[0.0; 5], &IntegrationConfig::default()).unwrap();
        let c = classify_links(&traj, &net, &Thresholds::default());
        assert_eq!(overload_cut(&c, &net), Err(AnalysisError::NoBufferLinks));
    }
}
