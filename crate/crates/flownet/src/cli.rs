//! The `flownet` command line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use flownet_core::analysis::{
    classify_links, dichotomy_verdict_staged, equilibrium_from, random_initial_state, AnalysisConfig, Consensus,
    Resilience, ResilienceConfig, ResilienceCurve, Verdict,
};
use flownet_core::cuts::{maxflow_report, CutError, CutReport, Enumerator};
use flownet_core::dynamics::{integrate_staged, Stage, Trajectory};
use flownet_core::properties::{
    instance_seed, run_instance, random_instance, Property, SuiteConfig, SuiteReport,
};
use flownet_core::routing::{check_axioms, check_monotonicity, AxiomCheck, MonotonicityCheck};
use flownet_core::{Network, RoutingPolicy};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output;
use crate::scenario::{FamilySpec, Format, Policy, ResilienceSpec, Scenario};

#[derive(Parser, Debug)]
#[command(name = "flownet", version, about = "Simulate and analyze dynamical flow networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate a scenario and write its trajectory.
    Simulate(RunArgs),
    /// Cut analysis, simulation and the resulting stability verdict.
    Analyze(AnalyzeArgs),
    /// Per-link tags of a simulated scenario.
    Classify(RunArgs),
    /// Largest cut violation max_U (lambda_U - C_U) of the (final) network.
    Mincut(MincutArgs),
    /// Empirical resilience curve under a family of capacity reductions.
    Resilience(ResilienceArgs),
    /// Run policy property suites.
    VerifyPolicy(VerifyArgs),
    /// Print a scenario in normal form.
    Normalize(NormalizeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[command(flatten)]
    pub tol: Overrides,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Overrides of the scenario's integration and analysis settings.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Distance below a finite buffer that counts as reaching it.
    #[arg(long)]
    pub tol_buffer: Option<f64>,
    /// Band below a finite buffer that stops the integration.
    #[arg(long)]
    pub tol_hit: Option<f64>,
    /// Relative precision of the buffer-hit time.
    #[arg(long)]
    pub tol_step: Option<f64>,
    #[arg(long)]
    pub tol_equilibrium: Option<f64>,
    #[arg(long)]
    pub tol_flow: Option<f64>,
    #[arg(long)]
    pub tol_slope: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        let i = &mut s.integration;
        let a = &mut s.analysis;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = Some(v);
                }
            };
        }
        set!(i.t_max, self.t_max);
        set!(i.tol_hit, self.tol_hit);
        set!(i.tol_step, self.tol_step);
        set!(i.tol_equilibrium, self.tol_equilibrium);
        set!(i.rtol, self.rtol);
        set!(i.atol, self.atol);
        set!(i.sample_interval, self.sample_interval);
        set!(a.tol_buffer, self.tol_buffer);
        set!(a.tol_flow, self.tol_flow);
        set!(a.tol_slope, self.tol_slope);
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    /// Extra runs from random initial states that must reach the same
    /// equilibrium (overrides the scenario).
    #[arg(long)]
    pub consensus: Option<usize>,
    /// Skip the sampled axiom check.
    #[arg(long)]
    pub skip_axioms: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Auto,
    Enumerate,
    Maxflow,
}

#[derive(Args, Debug, Clone)]
pub struct MincutArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    #[arg(long, value_enum, default_value_t = Engine::Auto)]
    pub engine: Engine,
    /// List every maximizer.
    #[arg(long)]
    pub all: bool,
    /// Largest number of non-destination nodes to enumerate.
    #[arg(long, default_value_t = 20)]
    pub enumeration_limit: usize,
    /// Analyze the nominal network instead of the last stage.
    #[arg(long)]
    pub nominal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Sequential,
    Uniform,
}

#[derive(Args, Debug, Clone)]
pub struct ResilienceArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Links drained in order by the sequential family.
    #[arg(long, value_delimiter = ',')]
    pub links: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Vec<f64>,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long)]
    pub loss_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Axioms,
    Monotone,
    Contraction,
    Order,
    Sign,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Check the scenario's network and policy; without it, random networks
    /// with random softmax policies are used.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    /// State pairs per instance for the sign suite.
    #[arg(long, default_value_t = 1000)]
    pub sign_pairs: usize,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub tol_contraction: Option<f64>,
    #[arg(long)]
    pub tol_order: Option<f64>,
    /// Write a JUnit XML report here.
    #[arg(long)]
    pub junit: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct NormalizeArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output syntax; defaults to the input's.
    #[arg(long, value_enum)]
    pub to: Option<Syntax>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Syntax {
    Json,
    Toml,
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    match run(&cli.command, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

pub fn run(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(a, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Classify(a) => classify(a, out),
        Command::Mincut(a) => mincut(a, out),
        Command::Resilience(a) => resilience(a, out),
        Command::VerifyPolicy(a) => verify(a, out),
        Command::Normalize(a) => normalize(a, out),
    }
}

/// A loaded scenario with its networks and policy built.
pub struct Loaded {
    pub scenario: Scenario,
    pub stages: Vec<(f64, Network)>,
    pub policy: Policy,
    pub rho0: Vec<f64>,
}

impl Loaded {
    pub fn new(scenario: Scenario, seed: u64) -> Result<Loaded, CliError> {
        let stages = scenario.stage_networks()?;
        let policy = scenario.policy.build(&stages[0].1)?;
        let rho0 = scenario.initial_state(&stages[0].1, seed)?;
        Ok(Loaded { scenario, stages, policy, rho0 })
    }

    pub fn load(args: &ScenarioArgs) -> Result<Loaded, CliError> {
        let mut s = Scenario::load(&args.scenario)?;
        args.tol.apply(&mut s);
        Loaded::new(s, args.seed)
    }

    pub fn network(&self) -> &Network {
        &self.stages.last().expect("at least one stage").1
    }

    pub fn stage_refs(&self) -> Vec<Stage<'_>> {
        self.stages.iter().map(|(t, n)| Stage { start: *t, network: n }).collect()
    }

    pub fn simulate(&self) -> Result<Trajectory, CliError> {
        let cfg = self.scenario.integration.config();
        check_stage_times(&self.stages, cfg.t_max)?;
        Ok(integrate_staged(&self.stage_refs(), self.policy.as_dyn(), &self.rho0, &cfg)?)
    }

    pub fn analysis_config(&self, axioms: bool) -> AnalysisConfig {
        AnalysisConfig {
            integration: self.scenario.integration.config(),
            thresholds: self.scenario.analysis.thresholds(),
            axioms: axioms.then(AxiomCheck::default),
            ..AnalysisConfig::default()
        }
    }
}

fn check_stage_times(stages: &[(f64, Network)], t_max: f64) -> Result<(), CliError> {
    match stages.last() {
        Some((t, _)) if *t >= t_max => Err(CliError::Validation(format!(
            "stage switch at t = {t} is not before t_max = {t_max}"
        ))),
        _ => Ok(()),
    }
}

fn out_dir(dir: &Option<PathBuf>) -> Result<Option<&Path>, CliError> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d).map_err(CliError::io(format!("creating {}", d.display())))?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

fn file(dir: &Path, name: &str) -> Result<fs::File, CliError> {
    let path = dir.join(name);
    fs::File::create(&path).map_err(CliError::io(format!("creating {}", path.display())))
}

fn write_json(w: &mut dyn Write, v: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    writeln!(w, "{text}").map_err(CliError::io("writing output"))
}

fn write_json_file(dir: &Path, name: &str, v: &Value) -> Result<(), CliError> {
    write_json(&mut file(dir, name)?, v)
}

fn write_run(dir: &Path, traj: &Trajectory, network: &Network) -> Result<Value, CliError> {
    output::write_trajectory(io::BufWriter::new(file(dir, "trajectory.csv")?), traj, network)?;
    let t = output::termination(traj, network);
    write_json_file(dir, "termination.json", &t)?;
    Ok(t)
}

fn simulate(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let l = Loaded::load(&a.common)?;
    let traj = l.simulate()?;
    let network = l.network();
    if let Some(dir) = out_dir(&a.common.out)? {
        write_run(dir, &traj, network)?;
    }
    match a.common.format {
        OutputFormat::Csv => Ok(output::write_trajectory(out, &traj, network)?),
        OutputFormat::Json => write_json(out, &output::termination(&traj, network)),
    }
}

/// Full analysis of a loaded scenario, as written to `analysis.json`.
pub fn analysis_json(l: &Loaded, consensus_runs: usize, axioms: bool, seed: u64) -> Result<(Value, Trajectory), CliError> {
    let cfg = l.analysis_config(axioms);
    check_stage_times(&l.stages, cfg.integration.t_max)?;
    let report = dichotomy_verdict_staged(&l.stage_refs(), l.policy.as_dyn(), &l.rho0, &cfg)?;
    let network = l.network();
    let consensus = match &report.verdict {
        Verdict::Equilibrium { rho, .. } if consensus_runs > 0 => {
            let c = consensus(network, l.policy.as_dyn(), rho, consensus_runs, seed, &cfg)?;
            Some(output::consensus(&c))
        }
        _ => None,
    };
    let v = output::analysis(&report, network, consensus);
    Ok((v, report.trajectory))
}

/// Equilibria reached from `runs` random initial states on the final
/// network, compared with `rho`.
pub fn consensus(
    network: &Network,
    policy: &dyn RoutingPolicy,
    rho: &[f64],
    runs: usize,
    seed: u64,
    cfg: &AnalysisConfig,
) -> Result<Consensus, CliError> {
    let mut int = cfg.integration.clone();
    int.stop_at_equilibrium = true;
    int.t0 = 0.0;
    int.t_max = int.t_max.max(1000.0);
    let found: Result<Vec<Vec<f64>>, _> = (0..runs)
        .into_par_iter()
        .map(|i| equilibrium_from(network, policy, &random_initial_state(network, instance_seed(seed, i)), &int))
        .collect();
    let mut states = vec![rho.to_vec()];
    states.extend(found?);
    Ok(Consensus::from_states(states))
}

fn analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let l = Loaded::load(&a.common)?;
    let runs = a.consensus.or(l.scenario.analysis.consensus_runs).unwrap_or(3);
    let (v, traj) = analysis_json(&l, runs, !a.skip_axioms, a.common.seed)?;
    if let Some(dir) = out_dir(&a.common.out)? {
        write_run(dir, &traj, l.network())?;
        write_json_file(dir, "analysis.json", &v)?;
    }
    write_json(out, &v)
}

fn classify(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let l = Loaded::load(&a.common)?;
    let traj = l.simulate()?;
    let network = l.network();
    let c = classify_links(&traj, network, &l.scenario.analysis.thresholds());
    let mut v = output::classification(&c, network);
    v["termination"] = json!(traj.termination.label());
    if let Some(dir) = out_dir(&a.common.out)? {
        write_run(dir, &traj, network)?;
        write_json_file(dir, "classification.json", &v)?;
    }
    match a.common.format {
        OutputFormat::Csv => Ok(output::write_classification_csv(out, &c, network)?),
        OutputFormat::Json => write_json(out, &v),
    }
}

/// Exhaustive cut scan split over threads.
pub fn enumerate_parallel(network: &Network, limit: usize) -> Result<CutReport, CutError> {
    let e = Enumerator::new(network, limit)?;
    let end = e.mask_end();
    let chunks = rayon::current_num_threads() as u64 * 4;
    let step = end.div_ceil(chunks).max(1024);
    let ranges: Vec<(u64, u64)> = (0..end).step_by(step as usize).map(|s| (s, (s + step).min(end))).collect();
    let partials: Vec<_> = ranges.into_par_iter().map(|(s, t)| e.scan(s..t, false)).collect();
    Ok(e.finish(partials))
}

pub fn cut_report(network: &Network, engine: Engine, limit: usize) -> Result<(CutReport, &'static str), CliError> {
    Ok(match engine {
        Engine::Enumerate => (enumerate_parallel(network, limit)?, "enumeration"),
        Engine::Maxflow => (maxflow_report(network)?, "maxflow"),
        Engine::Auto => match enumerate_parallel(network, limit) {
            Ok(r) => (r, "enumeration"),
            Err(CutError::TooManyNodes { .. }) => (maxflow_report(network)?, "maxflow"),
            Err(e) => return Err(e.into()),
        },
    })
}

fn mincut(a: &MincutArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut s = Scenario::load(&a.common.scenario)?;
    a.common.tol.apply(&mut s);
    let network = if a.nominal { s.nominal_network()? } else { s.final_network()? };
    let (report, engine) = cut_report(&network, a.engine, a.enumeration_limit)?;
    let v = output::mincut(&report, &network, engine, a.all);
    if let Some(dir) = out_dir(&a.common.out)? {
        write_json_file(dir, "mincut.json", &v)?;
    }
    write_json(out, &v)
}

/// Resilience settings: the command line over the scenario's section.
pub fn resilience_spec(a: &ResilienceArgs, s: &Scenario) -> Result<ResilienceSpec, CliError> {
    let mut spec = s.resilience.clone().unwrap_or(ResilienceSpec {
        family: FamilySpec::Uniform,
        deltas: vec![0.0],
        horizon: None,
        window: None,
        loss_tol: None,
        resolution: None,
    });
    match a.family {
        Some(FamilyKind::Uniform) => spec.family = FamilySpec::Uniform,
        Some(FamilyKind::Sequential) => spec.family = FamilySpec::Sequential { links: a.links.clone() },
        None if !a.links.is_empty() => spec.family = FamilySpec::Sequential { links: a.links.clone() },
        None => {}
    }
    if s.resilience.is_none() && a.family.is_none() && a.links.is_empty() {
        return Err(CliError::Validation(String::from(
            "no perturbation family: add a [resilience] section or pass --family",
        )));
    }
    if !a.deltas.is_empty() {
        spec.deltas = a.deltas.clone();
    }
    if a.deltas.iter().chain(&spec.deltas).any(|d| !(*d >= 0.0)) {
        return Err(CliError::Validation(String::from("deltas must be non-negative")));
    }
    spec.horizon = a.horizon.or(spec.horizon);
    spec.window = a.window.or(spec.window);
    spec.loss_tol = a.loss_tol.or(spec.loss_tol);
    spec.resolution = a.resolution.or(spec.resolution);
    Ok(spec)
}

/// The resilience curve of the nominal network, one delta per thread.
pub fn resilience_curve(s: &Scenario, spec: &ResilienceSpec) -> Result<ResilienceCurve, CliError> {
    let network = s.nominal_network()?;
    let policy = s.policy.build(&network)?;
    let family = s.family(&network, &spec.family)?;
    let d = ResilienceConfig::default();
    let cfg = ResilienceConfig {
        integration: s.integration.config(),
        horizon: spec.horizon.unwrap_or(d.horizon),
        window: spec.window.unwrap_or(d.window),
        loss_tol: spec.loss_tol,
        resolution: spec.resolution.unwrap_or(d.resolution),
    };
    let r = Resilience::new(&network, policy.as_dyn(), family, cfg)?;
    let points = spec.deltas.par_iter().map(|d| r.point(*d)).collect();
    Ok(ResilienceCurve { family: r.family().describe(&network), min_cut_capacity: r.min_cut_capacity(), points })
}

fn resilience(a: &ResilienceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut s = Scenario::load(&a.common.scenario)?;
    a.common.tol.apply(&mut s);
    let spec = resilience_spec(a, &s)?;
    let curve = resilience_curve(&s, &spec)?;
    if let Some(dir) = out_dir(&a.common.out)? {
        output::write_resilience_csv(io::BufWriter::new(file(dir, "resilience.csv")?), &curve)?;
    }
    match a.common.format {
        OutputFormat::Csv => Ok(output::write_resilience_csv(out, &curve)?),
        OutputFormat::Json => write_json(out, &output::resilience(&curve)),
    }
}

/// Outcome of one verify suite: its JSON report and the JUnit cases.
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub report: Value,
    pub cases: Vec<(String, Option<String>)>,
}

fn suites(s: Suite) -> Vec<Suite> {
    match s {
        Suite::All => vec![Suite::Axioms, Suite::Monotone, Suite::Contraction, Suite::Order, Suite::Sign],
        s => vec![s],
    }
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Axioms => "axioms",
        Suite::Monotone => "monotone",
        Suite::Contraction => "contraction",
        Suite::Order => "order",
        Suite::Sign => "sign",
        Suite::All => "all",
    }
}

/// Network and policy of instance `i`: the scenario's, or a random one.
enum Subject<'a> {
    Fixed(&'a Network, &'a Policy),
    Random(&'a SuiteConfig),
}

fn with_instance<T>(subject: &Subject<'_>, i: usize, f: impl FnOnce(&Network, &dyn RoutingPolicy, u64) -> T) -> T {
    match subject {
        Subject::Fixed(n, p) => f(n, p.as_dyn(), 0),
        Subject::Random(cfg) => {
            let (seed, n, p) = random_instance(cfg, i);
            f(&n, &p, seed)
        }
    }
}

pub fn verify_suite(s: Suite, scenario: Option<&Loaded>, cfg: &SuiteConfig) -> SuiteOutcome {
    let name = suite_name(s);
    let subject = match scenario {
        Some(l) => Subject::Fixed(l.network(), &l.policy),
        None => Subject::Random(cfg),
    };
    let case = |i: usize, seed: u64| format!("instance {i} (seed {seed})");
    match s {
        Suite::Axioms | Suite::Monotone => {
            // a fixed subject is checked once, with a larger sample
            let n = if scenario.is_some() { 1 } else { cfg.instances };
            let rows: Vec<(String, Option<String>, Value)> = (0..n)
                .into_par_iter()
                .map(|i| {
                    with_instance(&subject, i, |net, p, seed| {
                        let check_seed = instance_seed(cfg.seed, i);
                        if s == Suite::Axioms {
                            let samples = if scenario.is_some() { 5000 } else { 200 };
                            let r = check_axioms(p, net, &AxiomCheck { samples, seed: check_seed, ..AxiomCheck::default() });
                            let fail = (!r.passed()).then(|| {
                                let bad: Vec<&str> =
                                    r.results.iter().filter(|a| !a.passed).map(|a| a.axiom.label()).collect();
                                format!("failed: {} ({} evaluation errors)", bad.join(", "), r.errors.len())
                            });
                            (case(i, seed), fail, output::axioms(&r, net))
                        } else {
                            let samples = if scenario.is_some() { 1000 } else { 100 };
                            let r = check_monotonicity(
                                p,
                                net,
                                &MonotonicityCheck { samples, seed: check_seed, ..MonotonicityCheck::default() },
                            );
                            let ok = r.class != flownet_core::routing::MonotonicityClass::NotMonotone
                                && r.errors.is_empty();
                            let fail = (!ok).then(|| format!("{} sign violations", r.violation_count));
                            (case(i, seed), fail, output::monotonicity(&r, net))
                        }
                    })
                })
                .collect();
            let passed = rows.iter().all(|r| r.1.is_none());
            let report = if scenario.is_some() {
                rows[0].2.clone()
            } else {
                let failures: Vec<Value> =
                    rows.iter().filter(|r| r.1.is_some()).map(|r| json!({ "case": r.0, "report": r.2 })).collect();
                json!({ "instances": n, "seed": cfg.seed, "failures": failures })
            };
            let mut report = report;
            report["passed"] = json!(passed);
            SuiteOutcome { name, passed, report, cases: rows.into_iter().map(|r| (r.0, r.1)).collect() }
        }
        Suite::Contraction | Suite::Order | Suite::Sign => {
            let property = match s {
                Suite::Contraction => Property::Contraction,
                Suite::Order => Property::Order,
                _ => Property::Sign,
            };
            let outcomes = (0..cfg.instances)
                .into_par_iter()
                .map(|i| match &subject {
                    Subject::Fixed(n, p) => run_instance(
                        property,
                        n,
                        p.as_dyn(),
                        i,
                        instance_seed(cfg.seed, i),
                        cfg.sign_pairs,
                        &cfg.property,
                    ),
                    Subject::Random(cfg) => flownet_core::properties::random_suite_instance(property, cfg, i),
                })
                .collect();
            let r = SuiteReport { property, seed: cfg.seed, outcomes };
            let cases = r
                .outcomes
                .iter()
                .map(|o| (case(o.index, o.seed), (!o.passed).then(|| o.detail.clone())))
                .collect();
            SuiteOutcome { name, passed: r.passed(), report: output::suite(&r), cases }
        }
        Suite::All => unreachable!("expanded by suites()"),
    }
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = match &a.scenario {
        Some(p) => Some(Loaded::new(Scenario::load(p)?, a.seed)?),
        None => None,
    };
    let mut cfg = SuiteConfig { seed: a.seed, instances: a.instances, sign_pairs: a.sign_pairs, ..SuiteConfig::default() };
    if let Some(h) = a.horizon {
        cfg.property.horizon = h;
    }
    if let Some(t) = a.tol_contraction {
        cfg.property.tol_contraction = t;
    }
    if let Some(t) = a.tol_order {
        cfg.property.tol_order = t;
    }
    let outcomes: Vec<SuiteOutcome> = suites(a.suite).into_iter().map(|s| verify_suite(s, loaded.as_ref(), &cfg)).collect();
    let passed = outcomes.iter().all(|o| o.passed);
    let mut v = json!({
        "passed": passed,
        "subject": match &loaded {
            Some(l) => json!({ "scenario": l.scenario.name, "policy": l.policy.as_dyn().name() }),
            None => json!({ "random_softmax_instances": a.instances }),
        },
        "suites": outcomes.iter().map(|o| json!({ "suite": o.name, "report": o.report })).collect::<Vec<_>>(),
    });
    // sign failures should come with contraction failures on the same
    // instances; anything else points at the numerics
    let by_name = |n: &str| outcomes.iter().find(|o| o.name == n);
    if let (Some(c), Some(s)) = (by_name("contraction"), by_name("sign")) {
        if !s.passed && c.passed {
            v["cross_check"] = json!("sign inequality failed while contraction held: suspect the integration");
        }
    }
    if let Some(dir) = out_dir(&a.out)? {
        write_json_file(dir, "verify.json", &v)?;
    }
    if let Some(path) = &a.junit {
        let suites: Vec<(String, Vec<(String, Option<String>)>)> =
            outcomes.iter().map(|o| (o.name.to_string(), o.cases.clone())).collect();
        fs::write(path, output::junit(&suites)).map_err(CliError::io(format!("writing {}", path.display())))?;
    }
    match a.format {
        OutputFormat::Json => write_json(out, &v)?,
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(["suite", "case", "passed", "detail"])?;
            for o in &outcomes {
                for (c, f) in &o.cases {
                    w.write_record([o.name, c, if f.is_none() { "true" } else { "false" }, f.as_deref().unwrap_or("")])?;
                }
            }
            w.flush().map_err(CliError::io("writing output"))?;
        }
    }
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
        Err(CliError::PropertyFailure(format!("failed suites: {}", failed.join(", "))))
    }
}

fn normalize(a: &NormalizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let s = Scenario::load(&a.scenario)?;
    let format = match a.to {
        Some(Syntax::Json) => Format::Json,
        Some(Syntax::Toml) => Format::Toml,
        None => Format::from_path(&a.scenario)?,
    };
    let text = s.to_string(format)?;
    out.write_all(text.as_bytes()).map_err(CliError::io("writing output"))
}
