//! CSV and JSON renderings of trajectories, reports and curves.

use std::io::Write;

use flownet_core::analysis::{
    AnalysisReport, Consensus, DensityTag, Growth, KappaBound, LinkClassification, OverloadCut, ResilienceCurve,
    Verdict,
};
use flownet_core::cuts::CutReport;
use flownet_core::dynamics::{throughput, Termination, Trajectory};
use flownet_core::graph::{cut_sets, Bound};
use flownet_core::properties::SuiteReport;
use flownet_core::routing::{AxiomReport, MonotonicityReport};
use flownet_core::{Cut, LinkId, Network};
use serde_json::{json, Value};

/// 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn bound(b: Bound) -> Value {
    match b {
        Bound::Finite(x) => json!(x),
        Bound::Unbounded => json!("inf"),
    }
}

fn links(network: &Network, ids: &[LinkId]) -> Value {
    json!(ids.iter().map(|e| network.link_name(*e)).collect::<Vec<_>>())
}

fn cut(network: &Network, c: &Cut) -> Value {
    json!(c.names(network))
}

pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory, network: &Network) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let names: Vec<&str> = network.links().iter().map(|l| l.name.as_str()).collect();
    let mut header = vec![String::from("t")];
    for prefix in ["rho", "fin", "fout"] {
        header.extend(names.iter().map(|n| format!("{prefix}_{n}")));
    }
    out.write_record(&header)?;
    for i in 0..traj.len() {
        let row = std::iter::once(traj.times[i])
            .chain(traj.states[i].iter().copied())
            .chain(traj.inflows[i].iter().copied())
            .chain(traj.outflows[i].iter().copied())
            .map(float);
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Throughput of a finished run: the destination outflow at the end of an
/// equilibrium run, otherwise its average over the trailing half of the last
/// stage.
pub fn run_throughput(traj: &Trajectory, network: &Network) -> Option<f64> {
    match traj.termination {
        Termination::EquilibriumDetected { .. } => traj.destination_outflow(network).last().copied(),
        _ => {
            let start = traj.stage_starts.last().copied().unwrap_or(traj.t_start());
            let window = 0.5 * (traj.t_end() - start);
            if window > 0.0 {
                throughput(traj, network, window).ok()
            } else {
                None
            }
        }
    }
}

pub fn termination(traj: &Trajectory, network: &Network) -> Value {
    let hit = match &traj.termination {
        Termination::BufferHit { links: l, .. } => links(network, l),
        _ => json!([]),
    };
    json!({
        "termination": traj.termination.label(),
        "kappa_interval": traj.termination.kappa_interval().map(|(a, b)| [a, b]),
        "throughput": run_throughput(traj, network),
        "buffer_links": hit,
        "t_end": traj.t_end(),
        "final_state": traj.final_state(),
        "stage_starts": traj.stage_starts,
        "samples": traj.len(),
        "steps": { "accepted": traj.stats.accepted, "rejected": traj.stats.rejected, "rhs_evaluations": traj.stats.rhs_evaluations },
    })
}

pub fn classification(c: &LinkClassification, network: &Network) -> Value {
    let tags: Vec<Value> = c
        .links
        .iter()
        .map(|t| {
            let growth = t.growth.map(|g| match g {
                Growth::Linear(f) => json!({ "kind": "linear", "slope": f.slope, "r2": f.r2 }),
                Growth::Logarithmic(f) => json!({ "kind": "logarithmic", "coefficient": f.slope, "r2": f.r2 }),
            });
            json!({
                "link": network.link_name(t.link),
                "density": density_label(t.density),
                "at_capacity": t.at_capacity,
                "zero_outflow": t.zero_outflow,
                "zero_inflow": t.zero_inflow,
                "terminal_density": t.terminal_density,
                "mean_inflow": t.mean_inflow,
                "mean_outflow": t.mean_outflow,
                "trailing_slope": t.fit.map(|f| f.slope),
                "growth": growth,
            })
        })
        .collect();
    json!({
        "links": tags,
        "sets": {
            "buffer": links(network, &c.buffer_set()),
            "below": links(network, &c.below_set()),
            "inconclusive": links(network, &c.inconclusive()),
            "capacity": links(network, &c.capacity_set()),
            "zero_outflow": links(network, &c.zero_outflow_set()),
            "zero_inflow": links(network, &c.zero_inflow_set()),
        },
        "tol_slope": c.tol_slope,
        "tol_flow": c.tol_flow,
    })
}

pub fn density_label(t: DensityTag) -> &'static str {
    match t {
        DensityTag::Buffer => "buffer",
        DensityTag::Below => "below",
        DensityTag::Inconclusive => "inconclusive",
    }
}

pub fn write_classification_csv<W: Write>(w: W, c: &LinkClassification, network: &Network) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "link",
        "density",
        "at_capacity",
        "zero_outflow",
        "zero_inflow",
        "terminal_density",
        "mean_inflow",
        "mean_outflow",
    ])?;
    for t in &c.links {
        out.write_record([
            network.link_name(t.link).to_string(),
            density_label(t.density).to_string(),
            t.at_capacity.to_string(),
            t.zero_outflow.to_string(),
            t.zero_inflow.to_string(),
            float(t.terminal_density),
            float(t.mean_inflow),
            float(t.mean_outflow),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn overload(o: &OverloadCut, network: &Network) -> Value {
    let sets = cut_sets(network, &o.cut);
    json!({
        "nodes": cut(network, &o.cut),
        "outgoing": links(network, &sets.outgoing),
        "inflow": o.inflow,
        "capacity": bound(o.capacity),
        "value": o.value,
        "consistent": o.is_consistent(),
        "diagnostics": o.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
    })
}

fn kappa_bound(b: &KappaBound, network: &Network) -> Value {
    json!({ "bound": b.bound, "cut": cut(network, &b.cut) })
}

pub fn verdict(v: &Verdict, network: &Network) -> Value {
    match v {
        Verdict::Equilibrium { rho, throughput, residual } => json!({
            "kind": v.label(),
            "rho": rho,
            "throughput": throughput,
            "residual": residual,
        }),
        Verdict::OverloadFinite { cut, kappa_interval, bound, saturated } => json!({
            "kind": v.label(),
            "cut": overload(cut, network),
            "kappa_interval": [kappa_interval.0, kappa_interval.1],
            "kappa_upper_bound": bound.as_ref().map(|b| kappa_bound(b, network)),
            "saturated": saturated,
        }),
        Verdict::OverloadInfinite { cut, matches_u_star, growth } => json!({
            "kind": v.label(),
            "cut": overload(cut, network),
            "matches_u_star": matches_u_star,
            "growth": {
                "slope": growth.slope,
                "r2": growth.r2,
                "expected": growth.expected,
                "deviation": growth.deviation,
                "window": [growth.window.0, growth.window.1],
                "complement": links(network, &growth.complement),
                "complement_drift": growth.complement_drift,
            },
        }),
        Verdict::Indeterminate { reason } => json!({ "kind": v.label(), "reason": reason }),
    }
}

pub fn consensus(c: &Consensus) -> Value {
    json!({
        "runs": c.states.len(),
        "max_deviation": c.max_deviation,
        "tolerance": c.tolerance,
        "agrees": c.agrees(),
    })
}

pub fn analysis(r: &AnalysisReport, network: &Network, consensus: Option<Value>) -> Value {
    json!({
        "verdict": verdict(&r.verdict, network),
        "prediction": r.prediction.label(),
        "best_value": r.best_value,
        "u_star": cut(network, &r.u_star),
        "min_cut_capacity": flownet_core::cuts::min_cut_capacity(network).ok(),
        "total_inflow": network.total_inflow(),
        "monotonicity": r.monotonicity.label(),
        "axioms_passed": r.axioms_passed,
        "agreement": r.agreement,
        "notes": r.notes,
        "termination": termination(&r.trajectory, network),
        "classification": classification(&r.classification, network),
        "consensus": consensus,
    })
}

pub fn mincut(r: &CutReport, network: &Network, engine: &str, all: bool) -> Value {
    let mut v = json!({
        "best_value": r.best_value,
        "maximizer": r.maximizers.first().map(|c| cut(network, c)),
        "u_star": if r.maximizers_complete || r.best_value >= 0.0 { Some(cut(network, &r.u_star)) } else { None },
        "maximizer_count": if r.maximizers_complete { Some(r.maximizers.len()) } else { None },
        "violating": r.is_violating(),
        "critical": r.is_critical(),
        "engine": engine,
        "min_cut_capacity": flownet_core::cuts::min_cut_capacity(network).ok(),
        "total_inflow": network.total_inflow(),
    });
    if all {
        v["maximizers"] = json!(r.maximizers.iter().map(|c| cut(network, c)).collect::<Vec<_>>());
    }
    v
}

pub fn write_resilience_csv<W: Write>(w: W, curve: &ResilienceCurve) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["delta", "nu_hat", "nu_theory", "runs", "flagged"])?;
    for p in &curve.points {
        out.write_record([
            float(p.delta),
            p.nu_hat.map(float).unwrap_or_default(),
            float(p.nu_theory),
            p.runs.to_string(),
            p.flagged.len().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn resilience(curve: &ResilienceCurve) -> Value {
    json!({
        "family": curve.family,
        "min_cut_capacity": curve.min_cut_capacity,
        "points": curve.points.iter().map(|p| json!({
            "delta": p.delta,
            "nu_hat": p.nu_hat,
            "nu_theory": p.nu_theory,
            "runs": p.runs,
            "flagged": p.flagged,
        })).collect::<Vec<_>>(),
    })
}

pub fn axioms(r: &AxiomReport, network: &Network) -> Value {
    json!({
        "passed": r.passed(),
        "axioms": r.results.iter().map(|a| json!({
            "axiom": a.axiom.label(),
            "evaluations": a.evaluations,
            "max_violation": a.max_violation,
            "passed": a.passed,
            "worst": a.worst.map(|s| source(s, network)),
        })).collect::<Vec<_>>(),
        "errors": r.errors.iter().map(|(s, e)| format!("{}: {e}", source(*s, network))).collect::<Vec<_>>(),
    })
}

pub fn source(s: flownet_core::graph::Source, network: &Network) -> String {
    match s {
        flownet_core::graph::Source::Link(e) => format!("link {}", network.link_name(e)),
        flownet_core::graph::Source::Origin(v) => format!("origin {}", network.node_name(v)),
    }
}

pub fn monotonicity(r: &MonotonicityReport, network: &Network) -> Value {
    json!({
        "class": r.class.label(),
        "partials_checked": r.partials_checked,
        "violations": r.violation_count,
        "non_strict": r.non_strict_count,
        "lipschitz_estimate": r.lipschitz_estimate,
        "fd_step": r.fd_step,
        "examples": r.violations.iter().take(5).map(|v| json!({
            "source": source(v.source, network),
            "value": v.value,
        })).collect::<Vec<_>>(),
        "errors": r.errors.iter().map(|(s, e)| format!("{}: {e}", source(*s, network))).collect::<Vec<_>>(),
    })
}

pub fn suite(r: &SuiteReport) -> Value {
    let failures: Vec<Value> = r
        .failures()
        .map(|o| json!({ "index": o.index, "seed": o.seed, "worst": o.worst, "detail": o.detail }))
        .collect();
    let worst = r.outcomes.iter().map(|o| o.worst).filter(|w| w.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    json!({
        "property": r.property.label(),
        "seed": r.seed,
        "instances": r.outcomes.len(),
        "passed": r.passed(),
        "worst": if worst.is_finite() { Some(worst) } else { None },
        "failures": failures,
    })
}

/// A JUnit XML document with one test suite per entry.
pub fn junit(suites: &[(String, Vec<(String, Option<String>)>)]) -> String {
    let esc = |s: &str| {
        s.replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;")
            .replace('"', "&quot;")
    };
    let mut x = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<testsuites>\n");
    for (name, cases) in suites {
        let failures = cases.iter().filter(|c| c.1.is_some()).count();
        x += &format!(
            "  <testsuite name=\"{}\" tests=\"{}\" failures=\"{failures}\">\n",
            esc(name),
            cases.len()
        );
        for (case, failure) in cases {
            match failure {
                None => x += &format!("    <testcase classname=\"{}\" name=\"{}\"/>\n", esc(name), esc(case)),
                Some(msg) => {
                    x += &format!("    <testcase classname=\"{}\" name=\"{}\">\n", esc(name), esc(case));
                    x += &format!("      <failure message=\"{}\"/>\n", esc(msg));
                    x += "    </testcase>\n";
                }
            }
        }
        x += "  </testsuite>\n";
    }
    x += "</testsuites>\n";
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use flownet_core::dynamics::{integrate, IntegrationConfig};
    use flownet_core::fixtures::motivating_network;
    use flownet_core::routing::SoftmaxPolicy;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(2.0), "2.0000000000000000e0");
        for x in [1.0 / 3.0, 1e-300, 123456.789, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let net = motivating_network(Bound::Unbounded);
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let cfg = IntegrationConfig { t_max: 1.0, sample_interval: Some(0.5), ..IntegrationConfig::default() };
        let traj = integrate(&net, &p, &[0.0; 5], &cfg).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj, &net).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,rho_1,rho_2,rho_3,rho_4,rho_5,fin_1,fin_2,fin_3,fin_4,fin_5,fout_1,fout_2,fout_3,fout_4,fout_5"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), traj.len());
        assert!(rows[0].starts_with("0.0000000000000000e0,"));
        assert_eq!(rows[0].split(',').count(), 16);
        let t = termination(&traj, &net);
        assert_eq!(t["termination"], "reached_t_max");
        assert!(t["kappa_interval"].is_null());
    }

    #[test]
    fn junit_escapes() {
        let x = junit(&[("s".into(), vec![("a<b".into(), None), ("c".into(), Some("x \"y\"".into()))])]);
        assert!(x.contains("name=\"a&lt;b\""));
        assert!(x.contains("failures=\"1\""));
        assert!(x.contains("message=\"x &quot;y&quot;\""));
    }
}
