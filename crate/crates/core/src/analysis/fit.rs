//! Least-squares fits on trajectory windows.

use alloc::vec::Vec;

use crate::dynamics::Trajectory;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 0 for a constant series.
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).min(1.0) } else { 0.0 };
    Some(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// Linear interpolation of `values` (aligned with the samples of `traj`)
/// on `n` equally spaced times covering `[t0, t1]`.
pub fn resample(traj: &Trajectory, values: &[f64], t0: f64, t1: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(2);
    let mut ts = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
        while j + 1 < traj.times.len() && traj.times[j + 1] < t {
            j += 1;
        }
        let v = if j + 1 >= traj.times.len() || t <= traj.times[j] {
            values[j]
        } else {
            let (ta, tb) = (traj.times[j], traj.times[j + 1]);
            let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
            values[j] + w * (values[j + 1] - values[j])
        };
        ts.push(t);
        vs.push(v);
    }
    (ts, vs)
}

/// The trailing `fraction` of the last stage of `traj`.
pub fn trailing_window(traj: &Trajectory, fraction: f64) -> (f64, f64) {
    let start = traj.stage_starts.last().copied().unwrap_or(traj.t_start()).max(traj.t_start());
    let end = traj.t_end();
    (end - fraction * (end - start), end)
}

/// `rho = a + b ln(t - origin)` fit, for logarithmic growth.
pub fn log_time_fit(ts: &[f64], ys: &[f64], origin: f64) -> Option<LinearFit> {
    if ts.iter().any(|&t| !(t > origin)) {
        return None;
    }
    let xs: Vec<f64> = ts.iter().map(|&t| math::ln(t - origin)).collect();
    linear_fit(&xs, ys)
}
