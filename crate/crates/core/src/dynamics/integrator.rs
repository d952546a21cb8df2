//! Adaptive Dormand–Prince 5(4) integration with PI step control.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_state, DynamicsError, Evaluator, IntegrationStats, Termination, Trajectory};
use crate::graph::{Bound, LinkId, Network};
use crate::math;
use crate::routing::RoutingPolicy;

/// Components in `(-NEG_PROJECTION, 0)` after a step are set to zero.
const NEG_PROJECTION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationConfig {
    pub t0: f64,
    pub t_max: f64,
    pub dt_init: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Relative precision of the buffer-hit time.
    pub tol_step: f64,
    /// Width of the band below a finite buffer that counts as a hit.
    pub tol_buffer: f64,
    /// Equilibrium threshold on `|d/dt rho|_inf`; `None` means
    /// `1e-8 * max(1, total inflow)`.
    pub tol_equilibrium: Option<f64>,
    /// Consecutive accepted steps below the threshold needed to declare an
    /// equilibrium.
    pub equilibrium_window: usize,
    pub stop_at_equilibrium: bool,
    /// Record samples on this fixed grid instead of at every step.
    pub sample_interval: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            t0: 0.0,
            t_max: 100.0,
            dt_init: 1e-2,
            rtol: 1e-9,
            atol: 1e-11,
            tol_step: 1e-9,
            tol_buffer: 1e-6,
            tol_equilibrium: None,
            equilibrium_window: 10,
            stop_at_equilibrium: true,
            sample_interval: None,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

impl IntegrationConfig {
    pub fn equilibrium_threshold(&self, network: &Network) -> f64 {
        self.tol_equilibrium
            .unwrap_or_else(|| 1e-8 * network.total_inflow().max(1.0))
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: &str| Err(DynamicsError::InvalidConfig(String::from(what)));
        if !(self.t_max > self.t0) || !self.t_max.is_finite() {
            return bad("t_max must be finite and after t0");
        }
        if !(self.dt_init > 0.0) || !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return bad("dt_init, rtol and atol must be positive");
        }
        if !(self.tol_step > 0.0) || !(self.tol_buffer > 0.0) {
            return bad("tol_step and tol_buffer must be positive");
        }
        if self.sample_interval.is_some_and(|s| !(s > 0.0)) {
            return bad("sample_interval must be positive");
        }
        if !(self.h_max > 0.0) || !(self.h_min >= 0.0) {
            return bad("h_min must be non-negative and h_max positive");
        }
        Ok(())
    }
}

/// A network in effect from `start` until the next stage starts.
#[derive(Clone, Copy, Debug)]
pub struct Stage<'a> {
    pub start: f64,
    pub network: &'a Network,
}

/// Integrates from `rho0` at `cfg.t0`.
pub fn integrate<P: RoutingPolicy + ?Sized>(
    network: &Network,
    policy: &P,
    rho0: &[f64],
    cfg: &IntegrationConfig,
) -> Result<Trajectory, DynamicsError> {
    integrate_staged(&[Stage { start: cfg.t0, network }], policy, rho0, cfg)
}

/// Integrates through a piecewise-constant sequence of networks sharing one
/// topology, continuing from the current state at each switch.
pub fn integrate_staged<P: RoutingPolicy + ?Sized>(
    stages: &[Stage<'_>],
    policy: &P,
    rho0: &[f64],
    cfg: &IntegrationConfig,
) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    let first = stages
        .first()
        .ok_or_else(|| DynamicsError::InvalidConfig(String::from("no stages")))?;
    if first.start != cfg.t0 {
        return Err(DynamicsError::InvalidConfig(format!(
            "first stage starts at {} instead of t0 = {}",
            first.start, cfg.t0
        )));
    }
    for w in stages.windows(2) {
        if !(w[1].start > w[0].start) || w[1].network.link_count() != first.network.link_count() {
            return Err(DynamicsError::InvalidConfig(String::from(
                "stages must start in increasing order and share the link set",
            )));
        }
    }
    check_state(first.network, rho0)?;

    let mut solver = Solver::new(first.network.link_count(), cfg, rho0);
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        inflows: Vec::new(),
        outflows: Vec::new(),
        stage_starts: stages.iter().map(|s| s.start).take_while(|&s| s < cfg.t_max).collect(),
        termination: Termination::ReachedTMax,
        stats: IntegrationStats::default(),
    };

    for (i, stage) in stages.iter().enumerate() {
        if stage.start >= cfg.t_max {
            break;
        }
        let end = stages.get(i + 1).map_or(cfg.t_max, |s| s.start.min(cfg.t_max));
        let last = end >= cfg.t_max;
        let mut ev = Evaluator::new(stage.network, policy);
        if i == 0 {
            solver.record(&mut ev, &mut traj)?;
        }
        if let Some(term) = solver.run(&mut ev, end, last, &mut traj)? {
            traj.termination = term;
            break;
        }
    }
    traj.stats = solver.stats;
    Ok(traj)
}

// Dormand–Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const ALPHA: f64 = 0.7 / 5.0;
const BETA: f64 = 0.4 / 5.0;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

enum StepOutcome {
    Done,
    /// The policy could not be evaluated at some stage.
    DomainError(DynamicsError),
}

struct Solver<'c> {
    cfg: &'c IntegrationConfig,
    t: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
    fin: Vec<f64>,
    fout: Vec<f64>,
    h: f64,
    err_prev: f64,
    calm_steps: usize,
    next_sample: Option<(u64, f64)>,
    stats: IntegrationStats,
}

impl<'c> Solver<'c> {
    fn new(m: usize, cfg: &'c IntegrationConfig, rho0: &[f64]) -> Self {
        Solver {
            cfg,
            t: cfg.t0,
            y: rho0.to_vec(),
            k: core::array::from_fn(|_| vec![0.0; m]),
            tmp: vec![0.0; m],
            y_new: vec![0.0; m],
            err: vec![0.0; m],
            fin: vec![0.0; m],
            fout: vec![0.0; m],
            h: cfg.dt_init.min(cfg.h_max),
            err_prev: 1e-4,
            calm_steps: 0,
            next_sample: cfg.sample_interval.map(|dt| (1, cfg.t0 + dt)),
            stats: IntegrationStats::default(),
        }
    }

    fn record<P: RoutingPolicy + ?Sized>(
        &mut self,
        ev: &mut Evaluator<'_, P>,
        traj: &mut Trajectory,
    ) -> Result<(), DynamicsError> {
        if traj.times.last().is_some_and(|&t| t >= self.t) {
            return Ok(());
        }
        ev.flows(&self.y, &mut self.fin, &mut self.fout)?;
        self.stats.rhs_evaluations += 1;
        traj.times.push(self.t);
        traj.states.push(self.y.clone());
        traj.inflows.push(self.fin.clone());
        traj.outflows.push(self.fout.clone());
        Ok(())
    }

    fn eval<P: RoutingPolicy + ?Sized>(
        ev: &mut Evaluator<'_, P>,
        stats: &mut IntegrationStats,
        y: &[f64],
        out: &mut [f64],
    ) -> Result<(), DynamicsError> {
        stats.rhs_evaluations += 1;
        ev.rhs(y, out)
    }

    /// One Dormand–Prince step of size `h` from `(t, y)` with `k[0] = f(y)`;
    /// writes the 5th-order solution into `y_new`, `f(y_new)` into `k[6]` and
    /// the error estimate into `err`.
    fn step<P: RoutingPolicy + ?Sized>(&mut self, ev: &mut Evaluator<'_, P>, h: f64) -> StepOutcome {
        let n = self.y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let y = &self.y;
        let tmp = &mut self.tmp;
        let stats = &mut self.stats;
        macro_rules! stage {
            ($out:expr, |$i:ident| $e:expr) => {{
                for $i in 0..n {
                    tmp[$i] = y[$i] + h * $e;
                }
                if let Err(e) = Self::eval(ev, stats, tmp, $out) {
                    return StepOutcome::DomainError(e);
                }
            }};
        }
        stage!(k2, |i| A21 * k1[i]);
        stage!(k3, |i| A31 * k1[i] + A32 * k2[i]);
        stage!(k4, |i| A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        stage!(k5, |i| A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        stage!(k6, |i| A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        for i in 0..n {
            self.y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        if let Err(e) = Self::eval(ev, stats, &self.y_new, k7) {
            return StepOutcome::DomainError(e);
        }
        for i in 0..n {
            self.err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        StepOutcome::Done
    }

    fn error_norm(&self) -> f64 {
        let n = self.y.len().max(1);
        let mut acc = 0.0;
        for i in 0..self.y.len() {
            let sc = self.cfg.atol + self.cfg.rtol * self.y[i].abs().max(self.y_new[i].abs());
            let r = self.err[i] / sc;
            acc += r * r;
        }
        math::sqrt(acc / n as f64)
    }

    fn h_floor(&self) -> f64 {
        self.cfg.h_min.max(8.0 * f64::EPSILON * self.t.abs())
    }

    fn shrink(&mut self, h: f64, factor: f64, reason: impl FnOnce() -> String) -> Result<(), DynamicsError> {
        self.stats.rejected += 1;
        self.h = h * factor;
        if self.h < self.h_floor() {
            return Err(DynamicsError::StepUnderflow { t: self.t, h: self.h, reason: reason() });
        }
        Ok(())
    }

    /// Links whose density is in the hit band of its buffer, for state `y`.
    fn hit_links(network: &Network, y: &[f64], tol_buffer: f64) -> Vec<LinkId> {
        network
            .links()
            .iter()
            .enumerate()
            .filter(|(i, l)| matches!(l.buffer, Bound::Finite(b) if y[*i] >= b - tol_buffer))
            .map(|(i, _)| LinkId(i))
            .collect()
    }

    fn past_buffer(network: &Network, y: &[f64]) -> bool {
        network
            .links()
            .iter()
            .zip(y)
            .any(|(l, &r)| matches!(l.buffer, Bound::Finite(b) if r >= b))
    }

    /// Integrates until `end`; returns a termination if the run stops early
    /// (or reaches `t_max` in the last stage).
    fn run<P: RoutingPolicy + ?Sized>(
        &mut self,
        ev: &mut Evaluator<'_, P>,
        end: f64,
        last: bool,
        traj: &mut Trajectory,
    ) -> Result<Option<Termination>, DynamicsError> {
        let cfg = self.cfg;
        let network = ev.network();
        let tol_eq = cfg.equilibrium_threshold(network);
        let hit = Self::hit_links(network, &self.y, cfg.tol_buffer);
        if !hit.is_empty() {
            self.record(ev, traj)?;
            return Ok(Some(Termination::BufferHit { links: hit, interval: (self.t, self.t) }));
        }
        {
            let [k1, ..] = &mut self.k;
            Self::eval(ev, &mut self.stats, &self.y, k1)?;
        }
        if norm_inf(&self.k[0]) < tol_eq {
            self.calm_steps = self.calm_steps.max(1);
        } else {
            self.calm_steps = 0;
        }

        while self.t < end {
            if self.stats.accepted + self.stats.rejected >= cfg.max_steps {
                return Err(DynamicsError::StepLimit(cfg.max_steps));
            }
            let mut limit = end - self.t;
            let mut sample_due = false;
            if let Some((_, ts)) = self.next_sample {
                if ts - self.t <= limit {
                    limit = ts - self.t;
                    sample_due = true;
                }
            }
            let h_prop = self.h.min(cfg.h_max);
            let clipped = h_prop >= limit;
            let h = if clipped { limit } else { h_prop };

            if let StepOutcome::DomainError(e) = self.step(ev, h) {
                self.shrink(h, 0.25, || format!("{e}"))?;
                continue;
            }
            let err = self.error_norm();
            if err.is_nan() || self.y_new.iter().any(|v| v.is_nan()) {
                return Err(DynamicsError::NotANumber { t: self.t });
            }
            if err > 1.0 {
                let factor = (SAFETY * math::powf(err, -ALPHA)).max(MIN_FACTOR);
                self.shrink(h, factor.min(0.9), || String::from("error estimate too large"))?;
                continue;
            }
            if self.y_new.iter().any(|&v| v < -NEG_PROJECTION) {
                self.shrink(h, 0.5, || String::from("negative density"))?;
                continue;
            }
            let hit = Self::hit_links(network, &self.y_new, cfg.tol_buffer);
            if !hit.is_empty() || Self::past_buffer(network, &self.y_new) {
                return self.resolve_hit(ev, h, traj).map(Some);
            }

            // accept
            self.stats.accepted += 1;
            self.t = if clipped { self.t + limit } else { self.t + h };
            if clipped && sample_due {
                let (k, _) = self.next_sample.expect("sampling is on");
                // stay on the exact grid
                self.t = cfg.t0 + k as f64 * cfg.sample_interval.expect("sampling is on");
                self.next_sample = Some((k + 1, cfg.t0 + (k + 1) as f64 * cfg.sample_interval.unwrap()));
            } else if clipped {
                self.t = end;
            }
            core::mem::swap(&mut self.y, &mut self.y_new);
            self.y.iter_mut().for_each(|v| {
                if *v < 0.0 {
                    *v = 0.0
                }
            });
            self.k.swap(0, 6);

            let record_now = match self.next_sample {
                None => true,
                Some(_) => clipped && sample_due,
            };
            if record_now {
                self.record(ev, traj)?;
            }

            if norm_inf(&self.k[0]) < tol_eq {
                self.calm_steps += 1;
            } else {
                self.calm_steps = 0;
            }
            if last && cfg.stop_at_equilibrium && self.calm_steps >= cfg.equilibrium_window.max(1) {
                self.record(ev, traj)?;
                return Ok(Some(Termination::EquilibriumDetected { t: self.t }));
            }

            let e = err.max(1e-10);
            let factor = (SAFETY * math::powf(e, -ALPHA) * math::powf(self.err_prev, BETA)).clamp(MIN_FACTOR, MAX_FACTOR);
            self.err_prev = e.max(1e-4);
            let h_next = h * factor;
            self.h = if clipped { h_next.max(h_prop) } else { h_next };
        }
        self.record(ev, traj)?;
        Ok(if last { Some(Termination::ReachedTMax) } else { None })
    }

    /// The step of size `h` ends in or past a buffer band: bisect on the step
    /// size for the first entry into the band.
    fn resolve_hit<P: RoutingPolicy + ?Sized>(
        &mut self,
        ev: &mut Evaluator<'_, P>,
        h: f64,
        traj: &mut Trajectory,
    ) -> Result<Termination, DynamicsError> {
        let cfg = self.cfg;
        let network = ev.network();
        let mut lo = 0.0;
        let mut hi = h;
        let mut y_hi = self.y_new.clone();
        let mut hi_valid = !Self::past_buffer(network, &y_hi);
        for _ in 0..200 {
            if hi - lo <= cfg.tol_step * (self.t + hi).abs().max(f64::MIN_POSITIVE) && hi_valid {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let in_band = match self.step(ev, mid) {
                StepOutcome::DomainError(_) => None,
                StepOutcome::Done => Some(!Self::hit_links(network, &self.y_new, cfg.tol_buffer).is_empty()),
            };
            match in_band {
                Some(false) => lo = mid,
                Some(true) => {
                    hi = mid;
                    y_hi.clone_from(&self.y_new);
                    hi_valid = !Self::past_buffer(network, &y_hi);
                }
                None => {
                    hi = mid;
                    hi_valid = false;
                }
            }
        }
        if !hi_valid {
            // could not resolve the band: place the offending links just below their buffers
            for (l, v) in network.links().iter().zip(y_hi.iter_mut()) {
                if let Bound::Finite(b) = l.buffer {
                    if *v >= b {
                        *v = b - 0.5 * cfg.tol_buffer;
                    }
                }
            }
        }
        for v in y_hi.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.stats.accepted += 1;
        let (t_lo, t_hi) = (self.t + lo, self.t + hi);
        self.t = t_hi;
        self.y = y_hi;
        self.record(ev, traj)?;
        let links = Self::hit_links(network, &self.y, cfg.tol_buffer);
        Ok(Termination::BufferHit { links, interval: (t_lo, t_hi) })
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::throughput;
    use crate::fixtures::{motivating_network, perturbed_motivating};
    use crate::graph::NetworkBuilder;
    use crate::routing::{MotivatingPolicy, RoutingMatrix, SoftmaxPolicy};

    #[test]
    fn exponential_decay_matches_closed_form() {
        // Softmax on a lone link with unbounded buffer and no inflow:
        // rho' = -C (1 - e^{-b rho}), solved by ln(1 + (e^{b r0} - 1) e^{-C b t}) / b.
        let net = NetworkBuilder::new()
            .link("e", "o", "d", Bound::Finite(2.0), Bound::Unbounded)
            .inflow("o", 1.0)
            .build()
            .unwrap()
            .with_inflows(vec![0.0, 0.0]);
        let p = SoftmaxPolicy::uniform(&net, 0.5).unwrap();
        let cfg = IntegrationConfig { t_max: 3.0, stop_at_equilibrium: false, ..Default::default() };
        let e = net.link_by_name("e").unwrap();
        let traj = integrate(&net, &p, &[1.5], &cfg).unwrap();
        let exact = |t: f64| ((1.0 + ((0.5f64 * 1.5).exp() - 1.0) * (-2.0 * 0.5 * t).exp()).ln()) / 0.5;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[e.0] - exact(*t)).abs() < 1e-7, "t = {t}");
        }
        assert_eq!(traj.termination, Termination::ReachedTMax);
        assert_eq!(traj.t_end(), 3.0);
    }

    #[test]
    fn subcritical_reaches_equilibrium() {
        let net = motivating_network(Bound::Unbounded);
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let cfg = IntegrationConfig { t_max: 2000.0, ..Default::default() };
        let traj = integrate(&net, &p, &[0.0; 5], &cfg).unwrap();
        assert!(matches!(traj.termination, Termination::EquilibriumDetected { .. }), "{:?}", traj.termination);
        let mu: f64 = traj.destination_outflow(&net).last().copied().unwrap();
        assert!((mu - 2.0).abs() < 1e-6);
        // restarting at the equilibrium stops within the window
        let again = integrate(&net, &p, traj.final_state(), &cfg).unwrap();
        assert!(matches!(again.termination, Termination::EquilibriumDetected { .. }));
        assert!(again.stats.accepted <= cfg.equilibrium_window + 1);
    }

    #[test]
    fn monotone_start_and_mass_balance() {
        let net = motivating_network(Bound::Finite(3.0));
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let cfg = IntegrationConfig { t_max: 20.0, ..Default::default() };
        let traj = integrate(&net, &p, &[0.0; 5], &cfg).unwrap();
        for w in traj.states.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!(b + 1e-9 >= *a);
            }
        }
        let dest = traj.destination_outflow(&net);
        for (i, s) in traj.states.iter().enumerate() {
            let d = crate::dynamics::rhs(&net, &p, s).unwrap();
            let total: f64 = d.iter().sum();
            assert!((total - (2.0 - dest[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_buffer_overload_hits() {
        let net = perturbed_motivating(Bound::Finite(1.0), &[(3, 0.0), (4, 0.5)]);
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let cfg = IntegrationConfig { t_max: 100.0, ..Default::default() };
        let traj = integrate(&net, &p, &[0.0; 5], &cfg).unwrap();
        let Termination::BufferHit { links, interval } = &traj.termination else {
            panic!("{:?}", traj.termination)
        };
        assert!(!links.is_empty());
        assert!(interval.1 - interval.0 <= 1e-9 * interval.1 + 1e-15);
        assert!(interval.1 <= 8.0);
        for (l, r) in net.links().iter().zip(traj.final_state()) {
            assert!(*r < l.buffer.as_f64());
        }
    }

    #[test]
    fn sample_grid_and_stages() {
        let net = motivating_network(Bound::Unbounded);
        let cut = net.with_capacities(&[(crate::fixtures::link(3), 1.0 / 6.0)]).unwrap();
        let p = MotivatingPolicy::new(&net, RoutingMatrix::FlowControl).unwrap();
        let cfg = IntegrationConfig { t_max: 40.0, sample_interval: Some(0.5), ..Default::default() };
        let stages = [Stage { start: 0.0, network: &net }, Stage { start: 20.0, network: &cut }];
        let traj = integrate_staged(&stages, &p, &[0.0; 5], &cfg).unwrap();
        assert_eq!(traj.len(), 81);
        for (i, t) in traj.times.iter().enumerate() {
            assert_eq!(*t, 0.5 * i as f64);
        }
        assert_eq!(traj.stage_starts, [0.0, 20.0]);
        let mu = throughput(&traj, &cut, 1.0).unwrap();
        assert!(mu > 1.0 && mu < 2.5);
        assert!(throughput(&traj, &cut, 100.0).is_err());
    }

    #[test]
    fn zero_inflow_stays_empty() {
        let net = motivating_network(Bound::Unbounded).with_inflows(vec![0.0; 4]);
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let cfg = IntegrationConfig { t_max: 10.0, stop_at_equilibrium: false, ..Default::default() };
        let traj = integrate(&net, &p, &[0.0; 5], &cfg).unwrap();
        assert!(traj.states.iter().all(|s| s.iter().all(|&r| r == 0.0)));
        assert_eq!(throughput(&traj, &net, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let net = motivating_network(Bound::Finite(1.0));
        let p = SoftmaxPolicy::uniform(&net, 1.0).unwrap();
        let cfg = IntegrationConfig::default();
        assert!(integrate(&net, &p, &[2.0, 0.0, 0.0, 0.0, 0.0], &cfg).is_err());
        let bad = IntegrationConfig { t_max: -1.0, ..Default::default() };
        assert!(matches!(integrate(&net, &p, &[0.0; 5], &bad), Err(DynamicsError::InvalidConfig(_))));
    }
}
