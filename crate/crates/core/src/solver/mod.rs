//! Euler–Maruyama for the regularised delay equation
//!
//! ```text
//! x(t_{k+1}) = x(t_k) + Σ_i b_{i,n}(<x_{t_k}, e_i> + ε w_i B^{H_i}(t_k)) Δt + ΔW_k
//! ```
//!
//! together with its first variation with respect to `W` and coupled
//! Monte Carlo ensembles across mollification levels.

mod ensemble;
mod euler;
mod malliavin;

pub use ensemble::{mc_ensemble, EnsembleOptions, EnsembleResult, LevelMalliavin, LevelSummary, PairDistance, PathSource, RetainedPath, SeededNoise, ThetaPair};
pub use euler::{euler_solve, TrajectoryResult};
pub(crate) use euler::coefficient_path;
pub use malliavin::{first_variation, gronwall_bound, malliavin_solve, FirstVariationResult};

use serde::Serialize;

use crate::error::{arg_err, dim_err, Result};
use crate::noise::TimeGrid;
use crate::segment::{BasisSet, M2Element, SegmentGridConfig};

/// Time grid, delay, perturbation scale, initial segment and basis.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    grid: TimeGrid,
    segment: SegmentGridConfig,
    epsilon: f64,
    eta: M2Element,
    basis: BasisSet,
    dim: usize,
}

impl SolverConfig {
    /// `dim` is the number of active basis directions `e_1, …, e_dim`.
    pub fn new(horizon: f64, dt: f64, epsilon: f64, eta: M2Element, basis: BasisSet, dim: usize) -> Result<Self> {
        let grid = TimeGrid::new(horizon, dt)?;
        let segment = SegmentGridConfig::new(dt, eta.r())?;
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return arg_err(format!("perturbation scale must lie in (0, 1], got {epsilon}"));
        }
        if segment.k != eta.k() || basis.k() != eta.k() || (basis.r() - eta.r()).abs() > 1e-12 * eta.r() {
            return dim_err(format!(
                "segment grid mismatch: r/dt = {}, initial segment K = {}, basis K = {}",
                segment.k,
                eta.k(),
                basis.k()
            ));
        }
        if dim == 0 || dim > basis.len() {
            return arg_err(format!("active dimension {dim} outside 1..={}", basis.len()));
        }
        Ok(Self {
            grid,
            segment,
            epsilon,
            eta,
            basis,
            dim,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn r(&self) -> f64 {
        self.segment.r
    }

    /// History cells per delay, `K = r / Δt`.
    pub fn k(&self) -> usize {
        self.segment.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> &M2Element {
        &self.eta
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same configuration with another active dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.horizon(), self.dt(), self.epsilon, self.eta.clone(), self.basis.clone(), dim)
    }

    /// Weighted history rows `w_j e_i(u_j)` for the active directions; empty
    /// rows mark directions without a history part.
    pub(crate) fn coefficient_rows(&self) -> Vec<(f64, Vec<f64>)> {
        (0..self.dim)
            .map(|i| {
                let e = self.basis.get(i);
                let row = self.basis.weighted_hist(i);
                let row = if row.iter().all(|&v| v == 0.0) { Vec::new() } else { row };
                (e.point(), row)
            })
            .collect()
    }
}
