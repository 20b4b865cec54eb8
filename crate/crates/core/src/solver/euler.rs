use serde::Serialize;

use super::SolverConfig;
use crate::drift::{Drift, MollifiedDrift};
use crate::error::{dim_err, Result, SddeError};
use crate::noise::GaussianPathSet;

/// Solution path with its segment coefficients and drift trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryResult {
    dt: f64,
    dim: usize,
    x: Vec<f64>,
    /// `<x_{t_k}, e_i>` for `k = 0..=M`.
    coeffs: Vec<Vec<f64>>,
    /// Drift arguments `<x_{t_k}, e_i> + ε w_i B^{H_i}(t_k)` for `k < M`.
    args: Vec<Vec<f64>>,
    /// `Σ_i b_i(args_k)` for `k < M`.
    drift: Vec<f64>,
    increments: Vec<f64>,
    envelope_slack: f64,
}

impl TrajectoryResult {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.x.len() - 1
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn terminal(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn coeffs(&self, k: usize) -> &[f64] {
        &self.coeffs[k]
    }

    pub fn args(&self, k: usize) -> &[f64] {
        &self.args[k]
    }

    pub fn drift_trace(&self) -> &[f64] {
        &self.drift
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `min_k (t_k Σ‖b_i‖_∞ - |x_k - η(0) - W_k|)`; nonnegative by construction.
    pub fn envelope_slack(&self) -> f64 {
        self.envelope_slack
    }
}

/// `<x_s, e_i>` from the segment samples `window` (oldest first).
fn window_coefficients(rows: &[(f64, Vec<f64>)], window: &[f64]) -> Vec<f64> {
    let now = window[window.len() - 1];
    rows.iter()
        .map(|(p, row)| p * now + row.iter().zip(window).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// `<x_{t_k}, e_i>` for `k = 0..=M` along a given path `x` (with `x(0)` in
/// `x[0]` and the initial segment supplying negative times).
pub(crate) fn coefficient_path(config: &SolverConfig, x: &[f64]) -> Vec<Vec<f64>> {
    let k_hist = config.k();
    let rows = config.coefficient_rows();
    let mut ext = Vec::with_capacity(k_hist + x.len());
    ext.extend_from_slice(&config.eta().hist()[..k_hist]);
    ext.extend_from_slice(x);
    (0..x.len()).map(|k| window_coefficients(&rows, &ext[k..k + k_hist + 1])).collect()
}

/// Solves the regularised equation driven by `paths`. Only mollified drifts
/// are accepted: the singular equation has no pathwise Euler theory.
pub fn euler_solve(drift: &MollifiedDrift, paths: &GaussianPathSet, config: &SolverConfig) -> Result<TrajectoryResult> {
    let d = config.dim();
    if drift.dim() != d {
        return dim_err(format!("drift has {} components, solver expects {d}", drift.dim()));
    }
    if paths.grid() != config.grid() {
        return dim_err("driving paths are sampled on a different time grid");
    }
    let m = config.steps();
    let k_hist = config.k();
    let dt = config.dt();
    let eps = config.epsilon();
    let eta = config.eta();
    let rows = config.coefficient_rows();
    let n_noise = paths.components();
    let w = paths.w();

    // ext[j] = x(-r + j Δt); x_k = ext[K + k]
    let mut ext = Vec::with_capacity(k_hist + m + 1);
    ext.extend_from_slice(&eta.hist()[..k_hist]);
    ext.push(eta.point());

    let mut coeffs = Vec::with_capacity(m + 1);
    let mut args = Vec::with_capacity(m);
    let mut trace = Vec::with_capacity(m);
    let mut increments = Vec::with_capacity(m);

    let coefficient = |ext: &[f64], k: usize| window_coefficients(&rows, &ext[k..k + k_hist + 1]);

    let mut drift_integral = 0.0;
    for k in 0..m {
        let c = coefficient(&ext, k);
        let a: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(i, ci)| if i < n_noise { ci + eps * paths.perturbation(i, k) } else { *ci })
            .collect();
        let b: f64 = a.iter().enumerate().map(|(i, z)| drift.component_value(i, *z)).sum();
        // x_{k+1} = η(0) + W_{k+1} + Σ_{j≤k} b_j Δt, the Euler recursion
        // unrolled so that a vanishing drift reproduces η(0) + W exactly
        drift_integral += b * dt;
        ext.push(eta.point() + w[k + 1] + drift_integral);
        let dw = w[k + 1] - w[k];
        coeffs.push(c);
        args.push(a);
        trace.push(b);
        increments.push(dw);
    }
    coeffs.push(coefficient(&ext, m));

    let x = ext.split_off(k_hist);
    let bound = drift.sup_norm_sum();
    let mut slack = f64::INFINITY;
    for (k, xk) in x.iter().enumerate() {
        let t = k as f64 * dt;
        let dev = (xk - eta.point() - w[k]).abs();
        let s = t * bound - dev;
        // summation order differs between x and t·bound
        if s < -1e-12 * (1.0 + xk.abs() + w[k].abs()) {
            return Err(SddeError::Numerical(format!("bounded-drift envelope violated at step {k}: deviation {dev}, bound {}", t * bound)));
        }
        slack = slack.min(s);
    }

    Ok(TrajectoryResult {
        dt,
        dim: d,
        x,
        coeffs,
        args,
        drift: trace,
        increments,
        envelope_slack: slack,
    })
}
