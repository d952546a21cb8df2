//! Flow dynamics `d/dt rho_e = f_in_e(rho) - f_out_e(rho)` and their
//! numerical integration.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{Bound, LinkId, Network, Source, Target};
use crate::routing::{PolicyError, RoutingPolicy};

mod integrator;

pub use integrator::{integrate, integrate_staged, IntegrationConfig, Stage};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("policy evaluation failed for {sender}: {error}")]
    Policy { sender: String, error: PolicyError },
    #[error("NaN in the right-hand side at t = {t}")]
    NotANumber { t: f64 },
    #[error("step size underflow at t = {t} (h = {h:e}): {reason}")]
    StepUnderflow { t: f64, h: f64, reason: String },
    #[error("step limit of {0} reached")]
    StepLimit(usize),
    #[error("invalid initial state: {0}")]
    InvalidState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn sender_name(network: &Network, source: Source) -> String {
    match source {
        Source::Link(e) => format!("link `{}`", network.link_name(e)),
        Source::Origin(v) => format!("origin `{}`", network.node_name(v)),
    }
}

/// Evaluates link inflows, outflows and the right-hand side for one network
/// and policy, reusing internal buffers.
pub struct Evaluator<'a, P: ?Sized> {
    network: &'a Network,
    policy: &'a P,
    down: Vec<f64>,
    split: Vec<f64>,
    fin: Vec<f64>,
    fout: Vec<f64>,
}

impl<'a, P: RoutingPolicy + ?Sized> Evaluator<'a, P> {
    pub fn new(network: &'a Network, policy: &'a P) -> Self {
        let m = network.link_count();
        Evaluator { network, policy, down: Vec::new(), split: Vec::new(), fin: vec![0.0; m], fout: vec![0.0; m] }
    }

    pub fn network(&self) -> &'a Network {
        self.network
    }

    pub fn policy(&self) -> &'a P {
        self.policy
    }

    /// Writes `f_in_e` and `f_out_e` for every link.
    pub fn flows(&mut self, rho: &[f64], fin: &mut [f64], fout: &mut [f64]) -> Result<(), DynamicsError> {
        let net = self.network;
        fin.iter_mut().for_each(|x| *x = 0.0);
        fout.iter_mut().for_each(|x| *x = 0.0);
        for &source in net.sources() {
            let targets = net.targets(source);
            self.down.clear();
            for t in targets {
                if let Target::Link(k) = t {
                    self.down.push(rho[k.0]);
                }
            }
            let own = match source {
                Source::Link(e) => Some(rho[e.0]),
                Source::Origin(_) => None,
            };
            let local = crate::routing::LocalDensity { source, own, targets, downstream: &self.down };
            self.split.clear();
            self.split.resize(targets.len(), 0.0);
            self.policy
                .write_split(net, &local, &mut self.split)
                .map_err(|error| DynamicsError::Policy { sender: sender_name(net, source), error })?;
            let mut total = 0.0;
            for (t, &f) in targets.iter().zip(&self.split) {
                total += f;
                if let Target::Link(k) = t {
                    fin[k.0] += f;
                }
            }
            if let Source::Link(e) = source {
                fout[e.0] = total;
            }
        }
        Ok(())
    }

    /// Writes `d/dt rho` into `out`.
    pub fn rhs(&mut self, rho: &[f64], out: &mut [f64]) -> Result<(), DynamicsError> {
        let mut fin = core::mem::take(&mut self.fin);
        let mut fout = core::mem::take(&mut self.fout);
        let r = self.flows(rho, &mut fin, &mut fout);
        if r.is_ok() {
            for ((o, a), b) in out.iter_mut().zip(&fin).zip(&fout) {
                *o = a - b;
            }
        }
        self.fin = fin;
        self.fout = fout;
        r
    }
}

/// One-shot right-hand side evaluation.
pub fn rhs<P: RoutingPolicy + ?Sized>(network: &Network, policy: &P, rho: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let mut out = vec![0.0; network.link_count()];
    Evaluator::new(network, policy).rhs(rho, &mut out)?;
    Ok(out)
}

/// Checks that `rho` lies in `prod [0, B_e)`.
pub fn check_state(network: &Network, rho: &[f64]) -> Result<(), DynamicsError> {
    if rho.len() != network.link_count() {
        return Err(DynamicsError::InvalidState(format!(
            "{} densities for {} links",
            rho.len(),
            network.link_count()
        )));
    }
    for (l, &r) in network.links().iter().zip(rho) {
        let ok = r.is_finite()
            && r >= 0.0
            && match l.buffer {
                Bound::Finite(b) => r < b,
                Bound::Unbounded => true,
            };
        if !ok {
            return Err(DynamicsError::InvalidState(format!(
                "density {r} of link `{}` outside [0, {})",
                l.name, l.buffer
            )));
        }
    }
    Ok(())
}

/// Why an integration stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    ReachedTMax,
    /// Some finite-buffer densities entered `[B_e - tol_buffer, B_e)`; the
    /// entry time lies in `interval`.
    BufferHit { links: Vec<LinkId>, interval: (f64, f64) },
    EquilibriumDetected { t: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedTMax => "reached_t_max",
            Termination::BufferHit { .. } => "buffer_hit",
            Termination::EquilibriumDetected { .. } => "equilibrium_detected",
        }
    }

    pub fn kappa_interval(&self) -> Option<(f64, f64)> {
        match self {
            Termination::BufferHit { interval, .. } => Some(*interval),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

/// Sampled solution with per-sample link flows.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inflows: Vec<Vec<f64>>,
    pub outflows: Vec<Vec<f64>>,
    /// Start time of each stage; a single entry for unstaged runs.
    pub stage_starts: Vec<f64>,
    pub termination: Termination,
    pub stats: IntegrationStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectories have samples")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectories have samples")
    }

    pub fn final_outflows(&self) -> &[f64] {
        self.outflows.last().expect("trajectories have samples")
    }

    /// Time series of one link's density.
    pub fn density(&self, e: LinkId) -> Vec<f64> {
        self.states.iter().map(|s| s[e.0]).collect()
    }

    /// Total flow into destinations at each sample.
    pub fn destination_outflow(&self, network: &Network) -> Vec<f64> {
        let dest = network.destination_links();
        self.outflows.iter().map(|f| dest.iter().map(|e| f[e.0]).sum()).collect()
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s < t)
    }

    /// Time average of `values` over `[t_end - window, t_end]`, by the
    /// trapezoidal rule with linear interpolation at the window start.
    pub fn trailing_average(&self, values: &[f64], window: f64) -> Option<f64> {
        let t_end = self.t_end();
        let t0 = t_end - window;
        if !(window > 0.0) || t0 < self.t_start() - 1e-12 * t_end.abs().max(1.0) {
            return None;
        }
        let t0 = t0.max(self.t_start());
        let i = self.index_at(t0);
        let mut acc = 0.0;
        let (mut t_prev, mut v_prev) = if i == 0 || self.times[i] == t0 {
            (self.times[i], values[i])
        } else {
            let (ta, tb) = (self.times[i - 1], self.times[i]);
            let w = (t0 - ta) / (tb - ta);
            (t0, values[i - 1] + w * (values[i] - values[i - 1]))
        };
        for j in i..self.len() {
            let (t, v) = (self.times[j], values[j]);
            acc += 0.5 * (t - t_prev) * (v + v_prev);
            t_prev = t;
            v_prev = v;
        }
        let span = t_end - t0;
        if span > 0.0 {
            Some(acc / span)
        } else {
            Some(values[self.len() - 1])
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ThroughputError {
    #[error("averaging window {window} is longer than the trajectory span {span}")]
    WindowTooLong { window: f64, span: f64 },
}

/// Time average of the total flow into destinations over the trailing
/// `window`.
pub fn throughput(trajectory: &Trajectory, network: &Network, window: f64) -> Result<f64, ThroughputError> {
    let span = trajectory.t_end() - trajectory.t_start();
    let values = trajectory.destination_outflow(network);
    trajectory
        .trailing_average(&values, window)
        .ok_or(ThroughputError::WindowTooLong { window, span })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{link, motivating_network};
    use crate::routing::{MotivatingPolicy, RoutingMatrix, SoftmaxPolicy};

    #[test]
    fn fixed_matrix_at_zero() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::Fixed).unwrap();
        let d = rhs(&net, &p, &[0.0; 5]).unwrap();
        let expected = [4.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 0.0];
        for (a, b) in d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_only_receives_inflow() {
        let net = motivating_network(Bound::Finite(3.0));
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let d = rhs(&net, &p, &[0.0; 5]).unwrap();
        assert!((d.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mass_balance_at_nodes() {
        let net = motivating_network(Bound::Finite(3.0));
        let p = SoftmaxPolicy::uniform(&net, 0.8).unwrap();
        let rho = [0.3, 1.2, 2.9, 0.01, 1.7];
        let mut fin = [0.0; 5];
        let mut fout = [0.0; 5];
        Evaluator::new(&net, &p).flows(&rho, &mut fin, &mut fout).unwrap();
        // node b: inflow from link 1 leaves through 3 and 4
        assert!((fout[0] - fin[2] - fin[3]).abs() < 1e-15);
        // node c: links 2 and 3 feed link 5
        assert!((fout[1] + fout[2] - fin[4]).abs() < 1e-15);
        // total change = inflow - destination outflow
        let d = rhs(&net, &p, &rho).unwrap();
        let total: f64 = d.iter().sum();
        assert!((total - (2.0 - fout[3] - fout[4])).abs() < 1e-14);
    }

    #[test]
    fn excluded_point_names_the_sender() {
        let net = motivating_network(Bound::Finite(1.0));
        let p = SoftmaxPolicy::uniform(&net, 0.8).unwrap();
        let err = rhs(&net, &p, &[1.0, 0.5, 1.0, 1.0, 0.0]).unwrap_err();
        assert!(matches!(&err, DynamicsError::Policy { sender, .. } if sender == "link `1`"), "{err}");
        let _ = link(1);
    }

    #[test]
    fn state_checks() {
        let net = motivating_network(Bound::Finite(1.0));
        assert!(check_state(&net, &[0.0; 5]).is_ok());
        assert!(check_state(&net, &[0.0; 4]).is_err());
        assert!(check_state(&net, &[1.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(check_state(&net, &[-1e-3, 0.0, 0.0, 0.0, 0.0]).is_err());
    }
}
