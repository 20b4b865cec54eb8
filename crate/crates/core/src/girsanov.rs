//! Stochastic exponentials, Girsanov reweighting, the Wiener transform and
//! the weak-solution construction.
//!
//! Stochastic integrals are left-point sums on the solver grid and weights
//! are carried in the log domain.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{Drift, DriftSpec, MollifiedDrift};
use crate::error::{arg_err, dim_err, Result, SddeError};
use crate::noise::{GaussianPathSet, TimeGrid};
use crate::solver::{coefficient_path, euler_solve, PathSource, SolverConfig};
use crate::stats::{Accumulator, Estimate};

/// Log of a Doléans-Dade exponential together with its integrand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RnWeight {
    pub log_value: f64,
    pub integrand: Vec<f64>,
}

impl RnWeight {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

fn horizon_index(grid: &TimeGrid, t: f64) -> Result<usize> {
    grid.index_of(t).ok_or_else(|| SddeError::Argument(format!("t = {t} is not a node of the time grid")))
}

/// `Σ_{k<K} u_k ΔW_k - ½ Σ_{k<K} u_k² Δt` with `t = K Δt`.
pub fn doleans_exp(u: &[f64], w: &[f64], grid: &TimeGrid, t: f64) -> Result<RnWeight> {
    let kt = horizon_index(grid, t)?;
    if w.len() != grid.steps() + 1 {
        return dim_err("Brownian path does not match the grid");
    }
    if u.len() < kt {
        return dim_err(format!("integrand has {} samples, {kt} needed", u.len()));
    }
    if u[..kt].iter().any(|v| !v.is_finite()) {
        return arg_err("integrand must be finite");
    }
    let dt = grid.dt();
    let (mut stoch, mut quad) = (0.0, 0.0);
    for k in 0..kt {
        stoch += u[k] * (w[k + 1] - w[k]);
        quad += u[k] * u[k];
    }
    Ok(RnWeight {
        log_value: stoch - 0.5 * quad * dt,
        integrand: u[..kt].to_vec(),
    })
}

/// The density written in terms of the shifted motion `W̄ = W + ∫u`:
/// `Σ u_k ΔW̄_k - ½ Σ u_k² Δt`. It is the reciprocal of [`doleans_exp`]
/// evaluated with `-u`.
pub fn reverse_log_weight(u: &[f64], w_bar: &[f64], grid: &TimeGrid, t: f64) -> Result<f64> {
    Ok(doleans_exp(u, w_bar, grid, t)?.log_value)
}

/// `exp(|α| T Σ_i ‖b_i‖²_∞)`.
pub fn novikov_bound(drift: &DriftSpec, horizon: f64, alpha: f64) -> f64 {
    (alpha.abs() * horizon * drift.sup_norm_sq_sum()).exp()
}

/// Growth of a payoff in the path sup-norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Bounded,
    Polynomial,
    Exponential,
}

type PathFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Path functional depending only on grid values.
#[derive(Clone)]
pub struct Payoff {
    name: String,
    growth: Growth,
    /// Expectation under Brownian motion on `[0, T]`, when known.
    exact: Option<fn(f64) -> f64>,
    f: Arc<PathFn>,
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Payoff").field("name", &self.name).field("growth", &self.growth).finish()
    }
}

impl Payoff {
    pub fn one() -> Self {
        Self {
            name: "one".into(),
            growth: Growth::Bounded,
            exact: Some(|_| 1.0),
            f: Arc::new(|_| 1.0),
        }
    }

    /// `W(T)`.
    pub fn terminal() -> Self {
        Self {
            name: "terminal".into(),
            growth: Growth::Polynomial,
            exact: Some(|_| 0.0),
            f: Arc::new(|w| w[w.len() - 1]),
        }
    }

    /// `W(T)²`.
    pub fn terminal_square() -> Self {
        Self {
            name: "terminal_square".into(),
            growth: Growth::Polynomial,
            exact: Some(|t| t),
            f: Arc::new(|w| w[w.len() - 1].powi(2)),
        }
    }

    /// `cos W(T)`, with mean `e^{-T/2}`.
    pub fn cos_terminal() -> Self {
        Self {
            name: "cos_terminal".into(),
            growth: Growth::Bounded,
            exact: Some(|t| (-0.5 * t).exp()),
            f: Arc::new(|w| w[w.len() - 1].cos()),
        }
    }

    pub fn custom<F>(name: &str, growth: Growth, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            growth,
            exact: None,
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn exact(&self, horizon: f64) -> Option<f64> {
        self.exact.map(|e| e(horizon))
    }

    pub fn eval(&self, path: &[f64]) -> f64 {
        (self.f)(path)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PayoffComparison {
    pub name: String,
    pub base: Estimate,
    pub reweighted: Estimate,
    pub exact: Option<f64>,
    /// `reweighted - base`.
    pub difference: f64,
    /// Standard error of the difference, from the paired samples.
    pub difference_se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GirsanovReport {
    pub paths: usize,
    pub weight_mean: Estimate,
    pub min_weight: f64,
    pub novikov_bound: f64,
    pub payoffs: Vec<PayoffComparison>,
}

impl GirsanovReport {
    pub fn pass(&self) -> bool {
        self.weight_mean.within(1.0, 3.0) && self.min_weight > 0.0 && self.payoffs.iter().all(|p| p.pass)
    }
}

/// Compares `Ê[f(W̄) dP̄/dP]` with `Ê[f(W)]` where `W̄ = W + ∫ b^n` is the
/// drifted motion of the regularised solution and
/// `dP̄/dP = exp(-Σ b ΔW - ½ Σ b² Δt)`. Both sides estimate the Brownian
/// expectation of `f`.
pub fn girsanov_identity_check<S: PathSource + ?Sized>(
    drift: &MollifiedDrift,
    config: &SolverConfig,
    payoffs: &[Payoff],
    source: &S,
    paths: usize,
) -> Result<GirsanovReport> {
    if let Some(p) = payoffs.iter().find(|p| p.growth() == Growth::Exponential) {
        return arg_err(format!("payoff '{}' grows too fast for a square-integrable reweighting", p.name()));
    }
    if paths < 2 {
        return arg_err("need at least two paths");
    }
    if let Some(n) = source.available() {
        if n < paths {
            return arg_err(format!("{paths} paths requested but only {n} supplied"));
        }
    }
    let dt = config.dt();
    let horizon = config.horizon();
    // (log weight, payoffs on W, payoffs on W̄) per path
    type Row = (f64, Vec<f64>, Vec<f64>);
    let rows: Vec<Result<Row>> = (0..paths)
        .into_par_iter()
        .map(|index| {
            let p = source.path(index);
            let traj = euler_solve(drift, &p, config)?;
            let w = p.w();
            let mut w_bar = Vec::with_capacity(w.len());
            w_bar.push(0.0);
            let (mut acc, mut stoch, mut quad) = (0.0, 0.0, 0.0);
            for (k, b) in traj.drift_trace().iter().enumerate() {
                acc += b * dt;
                w_bar.push(w[k + 1] + acc);
                stoch += b * (w[k + 1] - w[k]);
                quad += b * b;
            }
            let log_w = -stoch - 0.5 * quad * dt;
            let base = payoffs.iter().map(|f| f.eval(w)).collect();
            let weighted = payoffs.iter().map(|f| f.eval(&w_bar)).collect();
            Ok((log_w, base, weighted))
        })
        .collect();

    let mut weight = Accumulator::default();
    let mut min_weight = f64::INFINITY;
    let n_f = payoffs.len();
    let mut base = vec![Accumulator::default(); n_f];
    let mut rew = vec![Accumulator::default(); n_f];
    let mut diff = vec![Accumulator::default(); n_f];
    for row in rows {
        let (log_w, b, f) = row?;
        let rn = log_w.exp();
        weight.push(rn);
        min_weight = min_weight.min(rn);
        for j in 0..n_f {
            base[j].push(b[j]);
            rew[j].push(f[j] * rn);
            diff[j].push(f[j] * rn - b[j]);
        }
    }
    let payoffs = payoffs
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let d = diff[j].finish();
            let b = base[j].finish();
            let r = rew[j].finish();
            let exact = f.exact(horizon);
            let mut pass = d.within(0.0, 3.0);
            if let Some(e) = exact {
                pass &= r.within(e, 3.0) || (r.se == 0.0 && (r.mean - e).abs() < 1e-12);
            }
            PayoffComparison {
                name: f.name().to_string(),
                base: b,
                reweighted: r,
                exact,
                difference: d.mean,
                difference_se: d.se,
                pass,
            }
        })
        .collect();
    Ok(GirsanovReport {
        paths,
        weight_mean: weight.finish(),
        min_weight,
        novikov_bound: novikov_bound(drift.base(), horizon, 1.0),
        payoffs,
    })
}

/// Simple function `α_i` on the grid `t_{i,0} < t_{i,1} < …` of one fBm
/// component; `values[j]` multiplies the increment over `(t_{i,j}, t_{i,j+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaComponent {
    pub component: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Step function `φ` on `[0, t]` and the simple functions `α_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerTestFunction {
    /// `0 = b_0 < b_1 < … < b_L = t`.
    pub breaks: Vec<f64>,
    /// `φ = values[l]` on `[b_l, b_{l+1})`.
    pub values: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<AlphaComponent>,
}

impl WienerTestFunction {
    pub fn constant(c: f64, t: f64) -> Self {
        Self {
            breaks: vec![0.0, t],
            values: vec![c],
            alpha: Vec::new(),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.breaks[self.breaks.len() - 1]
    }

    fn validate(&self) -> Result<()> {
        if self.breaks.len() < 2 || self.values.len() + 1 != self.breaks.len() {
            return arg_err("φ needs L+1 breakpoints for L values");
        }
        if self.breaks[0] != 0.0 || self.breaks.windows(2).any(|w| w[0] >= w[1]) {
            return arg_err("φ breakpoints must start at 0 and increase");
        }
        for a in &self.alpha {
            if a.times.len() != a.values.len() + 1 || a.times.windows(2).any(|w| w[0] >= w[1]) {
                return arg_err("α needs increasing times and one value per interval");
            }
        }
        Ok(())
    }

    pub fn phi(&self, s: f64) -> f64 {
        let l = self.breaks.partition_point(|&b| b <= s).saturating_sub(1);
        self.values[l.min(self.values.len() - 1)]
    }
}

/// `∫_0^t φ dW + Σ_i Σ_j α_{i,j} w_i (B^{H_i}(t_{i,j+1}) - B^{H_i}(t_{i,j}))`.
pub fn wiener_exponent(paths: &GaussianPathSet, test: &WienerTestFunction) -> Result<f64> {
    test.validate()?;
    let grid = paths.grid();
    let kt = horizon_index(grid, test.horizon())?;
    let w = paths.w();
    let mut total = 0.0;
    for k in 0..kt {
        total += test.phi(grid.time(k)) * (w[k + 1] - w[k]);
    }
    for a in &test.alpha {
        if a.component >= paths.components() {
            return arg_err(format!("α refers to fBm component {} of {}", a.component, paths.components()));
        }
        let b = paths.b(a.component);
        let weight = paths.weights()[a.component];
        for (j, v) in a.values.iter().enumerate() {
            let lo = horizon_index(grid, a.times[j])?;
            let hi = horizon_index(grid, a.times[j + 1])?;
            total += v * weight * (b[hi] - b[lo]);
        }
    }
    Ok(total)
}

/// Monte Carlo estimate of `E[X exp(∫φ dW + Σ α·ΔB)]` from `(X, noise)` pairs.
pub fn wiener_transform(samples: &[(f64, GaussianPathSet)], test: &WienerTestFunction) -> Result<Estimate> {
    if samples.is_empty() {
        return arg_err("Wiener transform needs at least one sample");
    }
    let mut acc = Accumulator::default();
    for (x, p) in samples {
        acc.push(x * wiener_exponent(p, test)?.exp());
    }
    Ok(acc.finish())
}

/// Probe dictionary: constants `±1, ±2` and `±1` steps switching sign at the
/// dyadic points `k t / 2^l`, `l = 1..=depth`.
pub fn probe_dictionary(t: f64, depth: usize) -> Vec<WienerTestFunction> {
    let mut out: Vec<WienerTestFunction> = [1.0, -1.0, 2.0, -2.0].iter().map(|&c| WienerTestFunction::constant(c, t)).collect();
    for l in 1..=depth {
        let cells = 1usize << l;
        let breaks: Vec<f64> = (0..=cells).map(|k| t * k as f64 / cells as f64).collect();
        for sign in [1.0, -1.0] {
            let values = (0..cells).map(|k| if k % 2 == 0 { sign } else { -sign }).collect();
            out.push(WienerTestFunction {
                breaks: breaks.clone(),
                values,
                alpha: Vec::new(),
            });
        }
    }
    out
}

/// Weak solution on the original noise: `x̃ = η(0) + W` and
/// `W̃ = W - ∫ b(x̃_s + ε𝔹(s)) ds`, with `dP̃/dP = exp(Σ b ΔW - ½ Σ b² Δt)`.
#[derive(Debug, Clone, Serialize)]
pub struct WeakSolution {
    pub x_tilde: Vec<f64>,
    pub w_tilde: Vec<f64>,
    pub drift_trace: Vec<f64>,
    pub rn: RnWeight,
    /// `max_k |x̃_k - η(0) - Σ_{j<k} b_j Δt - W̃_k|`.
    pub residual: f64,
}

pub fn weak_solution_construct<D: Drift + ?Sized>(drift: &D, paths: &GaussianPathSet, config: &SolverConfig) -> Result<WeakSolution> {
    if drift.dim() != config.dim() {
        return dim_err(format!("drift has {} components, solver expects {}", drift.dim(), config.dim()));
    }
    if paths.grid() != config.grid() {
        return dim_err("driving paths are sampled on a different time grid");
    }
    let eta0 = config.eta().point();
    let dt = config.dt();
    let eps = config.epsilon();
    let w = paths.w();
    let x_tilde: Vec<f64> = w.iter().map(|v| eta0 + v).collect();
    let coeffs = coefficient_path(config, &x_tilde);
    let m = config.steps();
    let n_noise = paths.components();
    let trace: Vec<f64> = (0..m)
        .map(|k| {
            coeffs[k]
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let shift = if i < n_noise { eps * paths.perturbation(i, k) } else { 0.0 };
                    drift.component_value(i, c + shift)
                })
                .sum()
        })
        .collect();

    let mut w_tilde = Vec::with_capacity(m + 1);
    let mut integral = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    w_tilde.push(0.0);
    integral.push(0.0);
    for k in 0..m {
        acc += trace[k] * dt;
        integral.push(acc);
        w_tilde.push(w[k + 1] - acc);
    }
    let residual = (0..=m)
        .map(|k| (x_tilde[k] - (eta0 + integral[k] + w_tilde[k])).abs())
        .fold(0.0, f64::max);
    let rn = doleans_exp(&trace, w, config.grid(), config.horizon())?;
    Ok(WeakSolution {
        x_tilde,
        w_tilde,
        drift_trace: trace,
        rn,
        residual,
    })
}
