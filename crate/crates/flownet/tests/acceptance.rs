//! Acceptance checks: one PASS/FAIL line per criterion.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use flownet::cli::{self, Loaded};
use flownet::Scenario;
use flownet_core::analysis::{classify_links, Growth};
use flownet_core::cuts::{enumerate_violations, max_violation_maxflow, min_cut_capacity, CutConfig};
use flownet_core::dynamics::rhs;
use flownet_core::graph::cut_violation;
use flownet_core::properties::{instance_seed, random_network, RandomNetworkConfig, SuiteConfig};
use flownet_core::LinkId;
use serde_json::Value;

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn load(name: &str) -> Loaded {
    Loaded::new(scenario(name), 0).unwrap_or_else(|e| panic!("{name}: {e}"))
}

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn criterion_1() -> Check {
    let mut parts = Vec::new();
    for name in ["fig1_softmax.toml", "fig1_r3.toml"] {
        let start = Instant::now();
        let l = load(name);
        let (v, _) = cli::analysis_json(&l, 3, false, 1).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let verdict = &v["verdict"];
        ensure(verdict["kind"] == "equilibrium", format!("{name}: verdict {}", verdict["kind"]))?;
        let mu = num(&verdict["throughput"]);
        ensure((mu - 2.0).abs() <= 1e-3, format!("{name}: throughput {mu}"))?;
        let dev = num(&v["consensus"]["max_deviation"]);
        ensure(v["consensus"]["runs"] == 4 && dev <= 1e-5, format!("{name}: equilibria differ by {dev:e}"))?;
        ensure(elapsed <= Duration::from_secs(10), format!("{name}: {elapsed:?}"))?;
        parts.push(format!("{name} mu = {mu:.9}, spread {dev:.1e}"));
    }
    Ok(parts.join("; "))
}

fn criterion_2() -> Check {
    let l = load("fig2_r3.toml");
    let traj = l.simulate().map_err(|e| e.to_string())?;
    let (t1, mid) = &l.stages[1];
    let (t2, last) = &l.stages[2];
    let g1 = min_cut_capacity(mid).map_err(|e| e.to_string())?;
    ensure((g1 - 13.0 / 6.0).abs() < 1e-12, format!("min-cut after the first drop is {g1}"))?;
    ensure(min_cut_capacity(last).map_err(|e| e.to_string())? == 2.0, "min-cut after the second drop is not 2")?;
    // settled on the intermediate network just before the second drop
    let i = traj.index_at(*t2) - 1;
    ensure(traj.times[i] > *t1 && traj.times[i] < *t2, "no sample between the drops")?;
    let drift = rhs(mid, l.policy.as_dyn(), &traj.states[i])
        .map_err(|e| e.to_string())?
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    ensure(drift < 1e-6, format!("|rho'| = {drift:e} at t = {}", traj.times[i]))?;

    let c = classify_links(&traj, last, &l.scenario.analysis.thresholds());
    let growing: Vec<LinkId> = (0..4).map(LinkId).collect();
    ensure(c.buffer_set() == growing, format!("growing links {:?}", c.buffer_set()))?;
    ensure(c.below_set() == [LinkId(4)], format!("converging links {:?}", c.below_set()))?;
    let mut min_r2: f64 = 1.0;
    for e in &growing {
        let r2 = match c.tag(*e).growth {
            Some(Growth::Linear(f)) | Some(Growth::Logarithmic(f)) => f.r2,
            None => 0.0,
        };
        min_r2 = min_r2.min(r2);
    }
    ensure(min_r2 >= 0.999, format!("growth fit R2 {min_r2}"))?;
    let drift5 = c.tag(LinkId(4)).fit.map(|f| f.slope.abs()).unwrap_or(f64::NAN);
    ensure(drift5 <= 1e-4, format!("link 5 drifts at {drift5:e}"))?;
    Ok(format!("|rho'| = {drift:.1e} before t2; links 1-4 growing (min R2 {min_r2:.6}); link 5 drift {drift5:.1e}"))
}

fn criterion_3() -> Check {
    let l = load("overload_infinite.toml");
    let net = l.network();
    let cuts = enumerate_violations(net, &CutConfig::default()).map_err(|e| e.to_string())?;
    let u = cuts.u_star.names(net);
    ensure(u == ["a", "b"], format!("U* = {u:?}"))?;
    ensure(cuts.best_value == 1.0, format!("lambda_U* - C_U* = {}", cuts.best_value))?;
    let (v, _) = cli::analysis_json(&l, 0, false, 0).map_err(|e| e.to_string())?;
    let verdict = &v["verdict"];
    ensure(verdict["kind"] == "overload_infinite", format!("verdict {}", verdict["kind"]))?;
    ensure(verdict["matches_u_star"] == true, "simulated cut differs from U*")?;
    let g = &verdict["growth"];
    let (slope, dev) = (num(&g["slope"]), num(&g["deviation"]));
    ensure(dev < 0.05, format!("slope {slope} deviates by {dev}"))?;
    ensure(num(&v["termination"]["t_end"]) >= 200.0, "horizon shorter than 200")?;
    Ok(format!("U* = {{a,b}}, slope {slope:.6} (expected 1)"))
}

fn criterion_4() -> Check {
    let l = load("overload_finite.toml");
    let (v, _) = cli::analysis_json(&l, 0, false, 0).map_err(|e| e.to_string())?;
    ensure(v["termination"]["termination"] == "buffer_hit", format!("termination {}", v["termination"]["termination"]))?;
    let verdict = &v["verdict"];
    ensure(verdict["kind"] == "overload_finite", format!("verdict {}", verdict["kind"]))?;
    ensure(verdict["saturated"] == true, "some out-link of the cut is not at its buffer")?;
    let net = l.network();
    let rho = &v["termination"]["final_state"];
    for name in verdict["cut"]["outgoing"].as_array().into_iter().flatten() {
        let e = net.link_by_name(name.as_str().unwrap_or_default()).ok_or("unknown link")?;
        let gap = net.buffer(e).as_f64() - num(&rho[e.0]);
        ensure(gap <= 1e-4, format!("link {name} is {gap:e} below its buffer"))?;
    }
    let hi = num(&verdict["kappa_interval"][1]);
    let bound = num(&verdict["kappa_upper_bound"]["bound"]);
    ensure((bound - 8.0).abs() < 1e-12, format!("bound {bound}"))?;
    ensure(hi <= bound + 1e-3, format!("hit at {hi} after the bound {bound}"))?;
    Ok(format!("buffer hit by t = {hi:.6} <= {bound}"))
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let mut parts = Vec::new();
    for (m, expected) in [(1, 1.0 / 3.0), (2, 2.0 / 3.0), (3, 1.0)] {
        let mut s = scenario(&format!("fig1_r{m}.toml"));
        let mut spec = s.resilience.take().ok_or("no resilience section")?;
        spec.deltas = vec![0.0];
        spec.resolution = Some(1e-3);
        let curve = cli::resilience_curve(&s, &spec).map_err(|e| e.to_string())?;
        let nu = curve.points[0].nu_hat.ok_or("no reduction reduces the throughput")?;
        ensure((nu - expected).abs() <= 0.05, format!("R{m}: nu(0) = {nu}, expected {expected:.4}"))?;
        parts.push(format!("R{m} {nu:.4}"));
    }
    ensure(start.elapsed() <= Duration::from_secs(300), format!("took {:?}", start.elapsed()))?;
    Ok(format!("nu(0): {}", parts.join(", ")))
}

fn suite(s: cli::Suite, limit: Duration) -> Check {
    let start = Instant::now();
    let cfg = SuiteConfig { seed: 2024, ..SuiteConfig::default() };
    let o = cli::verify_suite(s, None, &cfg);
    let elapsed = start.elapsed();
    let failed: Vec<&String> = o.cases.iter().filter(|c| c.1.is_some()).map(|c| &c.0).collect();
    ensure(o.passed, format!("{} of {} instances failed: {:?}", failed.len(), o.cases.len(), failed))?;
    ensure(o.cases.len() == 100, "expected 100 instances")?;
    ensure(elapsed <= limit, format!("took {elapsed:?}"))?;
    Ok(format!("100 random instances, worst {:.1e}", num(&o.report["worst"])))
}

fn cut_config(dyadic: bool) -> RandomNetworkConfig {
    RandomNetworkConfig {
        min_nodes: 2,
        max_nodes: 10,
        max_extra_links: 12,
        capacity: (0.25, 2.0),
        dyadic,
        unbounded_buffer_prob: 0.5,
        inflow: (0.25, 3.0),
        extra_origin_prob: 0.5,
        max_load: None,
        ..RandomNetworkConfig::default()
    }
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        for dyadic in [true, false] {
            let net = random_network(instance_seed(77, i), &cut_config(dyadic));
            let e = enumerate_violations(&net, &CutConfig::default()).map_err(|e| e.to_string())?.best_value;
            let m = max_violation_maxflow(&net).map_err(|e| e.to_string())?;
            if dyadic {
                ensure(e == m, format!("instance {i}: {e} vs {m}"))?;
            } else {
                worst = worst.max((e - m).abs());
                ensure((e - m).abs() <= 1e-12, format!("instance {i}: {e} vs {m}"))?;
            }
        }
    }
    ensure(start.elapsed() <= Duration::from_secs(10), format!("took {:?}", start.elapsed()))?;
    Ok(format!("100 dyadic instances exact, 100 float instances within {worst:.1e}"))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    // heavier inflow makes overloaded instances with several maximizers common
    let cfg = RandomNetworkConfig { inflow: (1.0, 4.0), ..cut_config(true) };
    let (mut checked, mut pairs, mut excluded) = (0, 0, 0);
    for i in 0..300 {
        let net = random_network(instance_seed(88, i), &cfg);
        let r = enumerate_violations(&net, &CutConfig::default()).map_err(|e| e.to_string())?;
        if r.maximizers.len() < 2 {
            continue;
        }
        if r.best_value < 0.0 {
            excluded += 1;
            continue;
        }
        checked += 1;
        for a in &r.maximizers {
            for b in &r.maximizers {
                let u = a.union(b);
                pairs += 1;
                ensure(
                    cut_violation(&net, &u) == r.best_value && r.maximizers.contains(&u),
                    format!("instance {i}: union of {:?} and {:?} is not a maximizer", a.names(&net), b.names(&net)),
                )?;
            }
        }
        ensure(cut_violation(&net, &r.u_star) == r.best_value, format!("instance {i}: U* is not a maximizer"))?;
    }
    ensure(checked >= 20, format!("only {checked} instances with several maximizers"))?;
    ensure(start.elapsed() <= Duration::from_secs(10), format!("took {:?}", start.elapsed()))?;
    Ok(format!(
        "{checked} instances, {pairs} pairs (scope max >= 0; {excluded} instances with max < 0 skipped)"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("sub-critical equilibrium", criterion_1),
        ("staged perturbation", criterion_2),
        ("infinite-buffer overload rate", criterion_3),
        ("finite-buffer saturation and hitting-time bound", criterion_4),
        ("resilience values", criterion_5),
        ("l1 contraction", || suite(cli::Suite::Contraction, Duration::from_secs(120))),
        ("cut engines agree", criterion_7),
        ("union closure of maximizers", criterion_8),
        ("order preservation", || suite(cli::Suite::Order, Duration::from_secs(120))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err(String::from("panicked")));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.2}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.2}s] {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
