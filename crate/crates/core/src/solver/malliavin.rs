use serde::Serialize;

use super::{SolverConfig, TrajectoryResult};
use crate::drift::{Drift, MollifiedDrift};
use crate::error::{arg_err, dim_err, Result};

/// `D_θ x(t_k)` for all `k`, with the coefficient derivatives used to step it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstVariationResult {
    theta: f64,
    theta_index: usize,
    dt: f64,
    /// `D_θ x(t_k)`, zero for `t_k < θ`.
    values: Vec<f64>,
    /// `D_θ <x_{t_k}, e_i>` for `k = θ_index..M`.
    coeff_derivs: Vec<Vec<f64>>,
    lipschitz_sum: f64,
    gronwall_ok: bool,
}

impl FirstVariationResult {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_index(&self) -> usize {
        self.theta_index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `D_θ x(t_k)`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// `D_θ <x_{t_k}, e_i>` for `t_k ≥ θ`.
    pub fn coeff_deriv(&self, k: usize) -> Option<&[f64]> {
        k.checked_sub(self.theta_index)
            .and_then(|j| self.coeff_derivs.get(j))
            .map(Vec::as_slice)
    }

    /// Whether every value respects [`gronwall_bound`].
    pub fn within_gronwall(&self) -> bool {
        self.gronwall_ok
    }

    pub fn lipschitz_sum(&self) -> f64 {
        self.lipschitz_sum
    }
}

/// `exp(Σ_i Lip(b_{i,n}) √(1+r) (t - θ))`.
pub fn gronwall_bound(lipschitz_sum: f64, r: f64, elapsed: f64) -> f64 {
    (lipschitz_sum * (1.0 + r).sqrt() * elapsed.max(0.0)).exp()
}

fn grid_step(t: f64, config: &SolverConfig, what: &str) -> Result<usize> {
    match config.grid().index_of(t) {
        Some(k) => Ok(k),
        None => arg_err(format!("{what} = {t} is not a node of the solver grid")),
    }
}

/// Forward Euler for the first variation
///
/// ```text
/// D_θ x(s + Δt) = D_θ x(s) + Σ_i b'_{i,n}(ξ_i(s)) D_θ<x_s, e_i> Δt,   D_θ x(θ) = 1,
/// D_θ<x_s, e_i> = D_θ x(s) e_i(0) + ∫ 1_{s+u ≥ θ} D_θ x(s+u) e_i(u) du.
/// ```
pub fn first_variation(drift: &MollifiedDrift, traj: &TrajectoryResult, config: &SolverConfig, theta: f64) -> Result<FirstVariationResult> {
    let q = grid_step(theta, config, "θ")?;
    let d = config.dim();
    if drift.dim() != d || traj.dim() != d {
        return dim_err("drift, trajectory and solver dimensions differ");
    }
    let m = config.steps();
    if traj.steps() != m {
        return dim_err("trajectory was computed on a different grid");
    }
    let k_hist = config.k();
    let dt = config.dt();
    let rows = config.coefficient_rows();

    let mut values = vec![0.0; m + 1];
    values[q] = 1.0;
    let mut coeff_derivs = Vec::with_capacity(m + 1 - q);
    for k in q..=m {
        // window node j sits at absolute step k + j - K; only steps >= q contribute
        let first = (q + k_hist).saturating_sub(k);
        let dxi: Vec<f64> = rows
            .iter()
            .map(|(p, row)| {
                let hist: f64 = if row.is_empty() {
                    0.0
                } else {
                    (first..=k_hist).map(|j| row[j] * values[k + j - k_hist]).sum()
                };
                p * values[k] + hist
            })
            .collect();
        if k < m {
            let args = traj.args(k);
            let slope: f64 = dxi.iter().enumerate().map(|(i, g)| drift.derivative(i, args[i]) * g).sum();
            values[k + 1] = values[k] + slope * dt;
        }
        coeff_derivs.push(dxi);
    }

    let lipschitz_sum = drift.lipschitz_sum();
    let gronwall_ok = (q..=m).all(|k| {
        let bound = gronwall_bound(lipschitz_sum, config.r(), (k - q) as f64 * dt);
        values[k].abs() <= bound * (1.0 + 1e-12)
    });

    Ok(FirstVariationResult {
        theta,
        theta_index: q,
        dt,
        values,
        coeff_derivs,
        lipschitz_sum,
        gronwall_ok,
    })
}

/// `D_θ x(t)`; zero when `θ > t`.
pub fn malliavin_solve(drift: &MollifiedDrift, traj: &TrajectoryResult, theta: f64, t: f64, config: &SolverConfig) -> Result<f64> {
    let q = grid_step(theta, config, "θ")?;
    let k = grid_step(t, config, "t")?;
    if q > k {
        return Ok(0.0);
    }
    Ok(first_variation(drift, traj, config, theta)?.at(k))
}
