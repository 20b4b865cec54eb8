use serde::Serialize;
use statrs::function::beta::beta as beta_fn;

use super::assumptions::{check_assumptions, AssumptionInput, Regime};
use crate::error::{arg_err, Result, SddeError};

/// Default Hölder exponent for the compactness diagnostics.
pub fn default_beta(delta_h: f64) -> f64 {
    0.9 * delta_h.min(0.5)
}

/// Theoretical Malliavin bounds at one `(θ, θ', t)` probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub t: f64,
    pub theta: f64,
    pub theta_p: f64,
    pub beta: f64,
    pub t_max: f64,
    /// `e^{M²T/2}`.
    pub prefactor: f64,
    /// `q = ε^{-3} (t - θ)^{δ_H} Σ A_j`.
    pub ratio: f64,
    /// `e^{M²T/2} (q / (1 - q))²`, the summed series.
    pub geometric: f64,
    /// `e^{M²T/2} δ_T^{-2δ_H} |t - θ|^{2δ_H}`.
    pub pointwise: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `3 (I_1 + I_2 + I_3)`, dominating `E|D_θ x(t) - D_θ' x(t)|²`.
    pub difference: f64,
    /// `∫_0^t` of the pointwise bound.
    pub integrated_pointwise: f64,
    /// `3 ∫_0^t ∫_0^t (I_1 + I_2 + I_3) / |θ - θ'|^{1+2β}`.
    pub holder: f64,
}

/// The three difference terms from `gap = θ_hi - θ_lo` and `left = t - θ_hi`.
fn difference_terms(c: f64, input: &AssumptionInput, gap: f64, left: f64) -> (f64, f64, f64) {
    let (dh, dt) = (input.delta_h, input.delta_t);
    let rest = left.powf(2.0 * dh);
    let i1 = c * dt.powf(-2.0 * dh) * gap.powf(2.0 * dh);
    let i2 = c * dt.powf(-2.0 * dh) * rest * gap / (1.0 + input.r).powi(2);
    let i3 = c * dt.powf(-4.0 * dh) * rest * gap.powf(2.0 * dh);
    (i1, i2, i3)
}

/// Closed form of `3 ∫∫ (I_1 + I_2 + I_3) |θ - θ'|^{-1-2β}` over `[0, t]²`.
fn holder_integral(c: f64, input: &AssumptionInput, t: f64, beta: f64) -> f64 {
    let (dh, dt) = (input.delta_h, input.delta_t);
    let a = 2.0 * dh - 1.0 - 2.0 * beta;
    // the factor 2 folds the square onto θ < θ'
    let j1 = 2.0 * c * dt.powf(-2.0 * dh) * t.powf(a + 2.0) / ((a + 1.0) * (a + 2.0));
    let j2 = 2.0 * c * dt.powf(-2.0 * dh) / (1.0 + input.r).powi(2) / (1.0 - 2.0 * beta)
        * beta_fn(2.0 * dh + 1.0, 2.0 - 2.0 * beta)
        * t.powf(2.0 * dh + 2.0 - 2.0 * beta);
    let j3 = 2.0 * c * dt.powf(-4.0 * dh) / (2.0 * dh - 2.0 * beta)
        * beta_fn(2.0 * dh + 1.0, 2.0 * dh - 2.0 * beta + 1.0)
        * t.powf(4.0 * dh - 2.0 * beta + 1.0);
    3.0 * (j1 + j2 + j3)
}

/// Bounds at `(θ, θ', t)` with `M = Σ ‖b_i‖_∞`. Refuses inadmissible inputs,
/// naming the failing condition.
pub fn malliavin_bounds(input: &AssumptionInput, t: f64, theta: f64, theta_p: f64, m_sup: f64, beta: Option<f64>) -> Result<BoundReport> {
    let report = check_assumptions(input, Regime::Finite)?;
    if !report.pass() {
        return Err(SddeError::Inadmissible(report.failures.join("; ")));
    }
    let t_max = report.t_max.unwrap_or(0.0);
    if !(0.0..=input.horizon).contains(&t) {
        return arg_err(format!("t = {t} outside [0, T = {}]", input.horizon));
    }
    if !(0.0..=t).contains(&theta) || !(0.0..=t).contains(&theta_p) {
        return arg_err(format!("need 0 ≤ θ, θ' ≤ t, got θ = {theta}, θ' = {theta_p}, t = {t}"));
    }
    if !(m_sup >= 0.0 && m_sup.is_finite()) {
        return arg_err(format!("M = {m_sup} must be finite and nonnegative"));
    }
    let beta = beta.unwrap_or_else(|| default_beta(input.delta_h));
    if !(beta > 0.0 && beta < input.delta_h.min(0.5)) {
        return arg_err(format!("β = {beta} outside (0, min(δ_H, 1/2))"));
    }

    let dh = input.delta_h;
    let c = (0.5 * m_sup * m_sup * input.horizon).exp();
    let ratio = (t - theta).powf(dh) * report.a_sum / input.epsilon.powi(3);
    if ratio >= 1.0 {
        return Err(SddeError::Inadmissible(format!("geometric ratio {ratio} is not below 1")));
    }
    let geometric = c * (ratio / (1.0 - ratio)).powi(2);
    let pointwise = c * input.delta_t.powf(-2.0 * dh) * (t - theta).powf(2.0 * dh);
    let (lo, hi) = if theta <= theta_p { (theta, theta_p) } else { (theta_p, theta) };
    let (i1, i2, i3) = difference_terms(c, input, hi - lo, t - hi);
    let integrated_pointwise = c * input.delta_t.powf(-2.0 * dh) * t.powf(2.0 * dh + 1.0) / (2.0 * dh + 1.0);

    Ok(BoundReport {
        t,
        theta,
        theta_p,
        beta,
        t_max,
        prefactor: c,
        ratio,
        geometric,
        pointwise,
        i1,
        i2,
        i3,
        difference: 3.0 * (i1 + i2 + i3),
        integrated_pointwise,
        holder: holder_integral(c, input, t, beta),
    })
}
