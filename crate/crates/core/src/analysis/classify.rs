//! Link classification: densities that reach their buffer (`B`) or stay
//! below it (`W`), and outflows tending to capacity (`C`) or zero (`Z_o`),
//! inflows tending to zero (`Z_i`).

use alloc::vec::Vec;

use super::fit::{linear_fit, log_time_fit, resample, trailing_window, LinearFit};
use crate::dynamics::{Termination, Trajectory};
use crate::graph::{Bound, LinkId, Network};

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    /// Finite buffers: distance below `B_e` that counts as reaching it.
    pub tol_buffer: f64,
    /// Minimum R² of a growth fit.
    pub r2_min: f64,
    /// Minimum growth rate; `None` means `1e-4 * total inflow`.
    pub tol_slope: Option<f64>,
    /// Largest trailing slope of a converging density.
    pub drift_tol: f64,
    /// Flow tolerance; `None` means `1e-3 * max finite capacity`.
    pub tol_flow: Option<f64>,
    /// Fraction of the last stage used for growth fits.
    pub growth_window: f64,
    /// Fraction of the last stage used for flow averages.
    pub flow_window: f64,
    /// Points of the uniform grid the growth window is resampled on.
    pub fit_points: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tol_buffer: 1e-4,
            r2_min: 0.999,
            tol_slope: None,
            drift_tol: 1e-4,
            tol_flow: None,
            growth_window: 0.5,
            flow_window: 0.1,
            fit_points: 400,
        }
    }
}

impl Thresholds {
    pub fn slope_tolerance(&self, network: &Network) -> f64 {
        self.tol_slope.unwrap_or(1e-4 * network.total_inflow())
    }

    pub fn flow_tolerance(&self, network: &Network) -> f64 {
        self.tol_flow.unwrap_or_else(|| {
            1e-3 * network
                .links()
                .iter()
                .filter_map(|l| l.capacity.finite())
                .fold(0.0, f64::max)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DensityTag {
    /// The density tends to the buffer (grows without bound for unbounded
    /// buffers).
    Buffer,
    /// The density stays below the buffer.
    Below,
    /// Neither criterion met.
    Inconclusive,
}

/// How a growing density was recognized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Growth {
    Linear(LinearFit),
    /// `rho ~ a + b ln(t - t_stage)`: growth at critical load.
    Logarithmic(LinearFit),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkTag {
    pub link: LinkId,
    pub density: DensityTag,
    pub at_capacity: bool,
    pub zero_outflow: bool,
    pub zero_inflow: bool,
    pub terminal_density: f64,
    pub mean_inflow: f64,
    pub mean_outflow: f64,
    /// Trailing linear fit (unbounded buffers only).
    pub fit: Option<LinearFit>,
    pub growth: Option<Growth>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkClassification {
    pub links: Vec<LinkTag>,
    pub tol_slope: f64,
    pub tol_flow: f64,
    pub thresholds: Thresholds,
}

impl LinkClassification {
    fn select(&self, f: impl Fn(&LinkTag) -> bool) -> Vec<LinkId> {
        self.links.iter().filter(|t| f(t)).map(|t| t.link).collect()
    }

    pub fn buffer_set(&self) -> Vec<LinkId> {
        self.select(|t| t.density == DensityTag::Buffer)
    }

    pub fn below_set(&self) -> Vec<LinkId> {
        self.select(|t| t.density == DensityTag::Below)
    }

    pub fn inconclusive(&self) -> Vec<LinkId> {
        self.select(|t| t.density == DensityTag::Inconclusive)
    }

    pub fn capacity_set(&self) -> Vec<LinkId> {
        self.select(|t| t.at_capacity)
    }

    pub fn zero_outflow_set(&self) -> Vec<LinkId> {
        self.select(|t| t.zero_outflow)
    }

    pub fn zero_inflow_set(&self) -> Vec<LinkId> {
        self.select(|t| t.zero_inflow)
    }

    pub fn tag(&self, e: LinkId) -> &LinkTag {
        &self.links[e.0]
    }
}

/// Tags every link from the tail of a trajectory.
///
/// Flow tags use trailing averages over `flow_window` of the last stage, or
/// the terminal sample when the run ended at an equilibrium or a buffer hit.
pub fn classify_links(traj: &Trajectory, network: &Network, th: &Thresholds) -> LinkClassification {
    let tol_slope = th.slope_tolerance(network);
    let tol_flow = th.flow_tolerance(network);
    let snapshot = !matches!(traj.termination, Termination::ReachedTMax);
    let (g0, g1) = trailing_window(traj, th.growth_window);
    let (f0, f1) = trailing_window(traj, th.flow_window);
    let stage_start = traj.stage_starts.last().copied().unwrap_or(traj.t_start());
    let last = traj.len() - 1;

    let links = network
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let e = LinkId(i);
            let rho: Vec<f64> = traj.states.iter().map(|s| s[i]).collect();
            let fin: Vec<f64> = traj.inflows.iter().map(|s| s[i]).collect();
            let fout: Vec<f64> = traj.outflows.iter().map(|s| s[i]).collect();
            let (mean_inflow, mean_outflow) = if snapshot || !(f1 > f0) {
                (fin[last], fout[last])
            } else {
                (
                    traj.trailing_average(&fin, f1 - f0).unwrap_or(fin[last]),
                    traj.trailing_average(&fout, f1 - f0).unwrap_or(fout[last]),
                )
            };
            let terminal_density = rho[last];

            let (density, fit, growth) = match l.buffer {
                Bound::Finite(b) => {
                    let tag = if terminal_density >= b - th.tol_buffer { DensityTag::Buffer } else { DensityTag::Below };
                    (tag, None, None)
                }
                Bound::Unbounded if matches!(traj.termination, Termination::EquilibriumDetected { .. }) || !(g1 > g0) => {
                    (DensityTag::Below, None, None)
                }
                Bound::Unbounded => {
                    let (ts, vs) = resample(traj, &rho, g0, g1, th.fit_points);
                    let fit = linear_fit(&ts, &vs);
                    let linear = fit.filter(|f| f.r2 >= th.r2_min && f.slope > tol_slope);
                    let log = log_time_fit(&ts, &vs, stage_start)
                        .filter(|f| f.r2 >= th.r2_min && f.slope > 0.0 && f.slope / (g1 - stage_start) > tol_slope);
                    match (linear, log, fit) {
                        (Some(f), _, _) => (DensityTag::Buffer, fit, Some(Growth::Linear(f))),
                        (None, Some(f), _) => (DensityTag::Buffer, fit, Some(Growth::Logarithmic(f))),
                        (None, None, Some(f)) if f.slope.abs() <= th.drift_tol => (DensityTag::Below, fit, None),
                        (None, None, None) => (DensityTag::Below, fit, None),
                        _ => (DensityTag::Inconclusive, fit, None),
                    }
                }
            };

            let cap = l.capacity.finite();
            let at_capacity = cap.is_some_and(|c| (mean_outflow - c).abs() <= tol_flow);
            let zero_outflow = !at_capacity && mean_outflow.abs() <= tol_flow;
            LinkTag {
                link: e,
                density,
                at_capacity,
                zero_outflow,
                zero_inflow: mean_inflow.abs() <= tol_flow,
                terminal_density,
                mean_inflow,
                mean_outflow,
                fit,
                growth,
            }
        })
        .collect();
    LinkClassification { links, tol_slope, tol_flow, thresholds: th.clone() }
}
