use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{arg_err, dim_err, Result};

/// Inputs of the standing smallness assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionInput {
    pub epsilon: f64,
    pub delta_h: f64,
    pub delta_t: f64,
    pub r: f64,
    /// Time horizon `T` tested against `T_max`.
    pub horizon: f64,
    pub hurst: Vec<f64>,
    pub weights: Vec<f64>,
    pub l1_norms: Vec<f64>,
    /// Local non-determinism constants `C_j`.
    pub sln: Vec<f64>,
}

impl AssumptionInput {
    pub fn validate(&self) -> Result<()> {
        let d = self.hurst.len();
        if self.weights.len() != d || self.l1_norms.len() != d || self.sln.len() != d {
            return dim_err(format!(
                "lists differ in length: {} Hurst, {} weights, {} L1 norms, {} constants",
                d,
                self.weights.len(),
                self.l1_norms.len(),
                self.sln.len()
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return arg_err(format!("ε = {} outside (0, 1]", self.epsilon));
        }
        // δ_H = 1 is accepted so that the boundary case stays computable
        if !(self.delta_h > 0.0 && self.delta_h <= 1.0) {
            return arg_err(format!("δ_H = {} outside (0, 1]", self.delta_h));
        }
        let positive = [self.delta_t, self.r, self.horizon];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return arg_err("δ_T, r and T must be positive");
        }
        if self.hurst.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
            return arg_err("Hurst parameters must lie in (0, 1)");
        }
        if self.l1_norms.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return arg_err("L1 norms must be finite and nonnegative");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hurst.len()
    }
}

/// `48 √2 (1 + r) Γ(δ_H) / √π`.
fn a_prefactor(r: f64, delta_h: f64) -> f64 {
    48.0 * SQRT_2 * (1.0 + r) * gamma(delta_h) / PI.sqrt()
}

/// `A_j = 48√2(1+r)Γ(δ_H)/√π · C_j^{-3/2} |w_j|^{-3} ‖b_j‖_{L¹}`, `j` 1-based.
pub fn compute_aj(input: &AssumptionInput, j: usize) -> Result<f64> {
    input.validate()?;
    if j == 0 || j > input.dim() {
        return arg_err(format!("component {j} outside 1..={}", input.dim()));
    }
    let (c, w, l1) = (input.sln[j - 1], input.weights[j - 1], input.l1_norms[j - 1]);
    if !(c > 0.0) || w == 0.0 || !w.is_finite() {
        return arg_err(format!("A_{j} needs C_j > 0 and w_j ≠ 0, got C_j = {c}, w_j = {w}"));
    }
    Ok(a_prefactor(input.r, input.delta_h) * c.powf(-1.5) * w.abs().powi(-3) * l1)
}

/// Largest `‖b_j‖_{L¹}` for which the sufficient condition gives `A_j ≤ 2^{-j}`.
pub fn l1_ceiling(input: &AssumptionInput, j: usize) -> Result<f64> {
    input.validate()?;
    if j == 0 || j > input.dim() {
        return arg_err(format!("component {j} outside 1..={}", input.dim()));
    }
    let (c, w) = (input.sln[j - 1], input.weights[j - 1]);
    Ok(0.5_f64.powi(j as i32) / a_prefactor(input.r, input.delta_h) * c.powf(1.5) * w.abs().powi(3))
}

/// Whether the finitely many components are the whole drift or a truncation
/// of an infinite sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Finite,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HurstVerdict {
    pub hurst: f64,
    pub ceiling: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub regime: Regime,
    /// `(ε³ - δ_T)^{1/δ_H}` when `δ_T < ε³`.
    pub t_max: Option<f64>,
    pub t_pass: bool,
    /// `δ_T < ε^{3/δ_H}`, the range stated alongside the horizon condition.
    pub delta_t_in_stated_range: bool,
    pub hurst: Vec<HurstVerdict>,
    pub h_pass: bool,
    pub a_values: Vec<f64>,
    pub a_sum: f64,
    pub a_pass: bool,
    /// `ε^{-3} T^{δ_H} Σ A_j`.
    pub combined: f64,
    pub combined_pass: bool,
    pub l1_ceilings: Vec<f64>,
    pub failures: Vec<String>,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Horizon, Hurst and smallness conditions; failures are collected, not raised.
pub fn check_assumptions(input: &AssumptionInput, regime: Regime) -> Result<AssumptionReport> {
    input.validate()?;
    let (h_tag, a_tag) = match regime {
        Regime::Finite => ("(H)", "(A)"),
        Regime::Truncated => ("(H')", "(A')"),
    };
    let eps3 = input.epsilon.powi(3);
    let mut failures = Vec::new();

    let t_max = (input.delta_t < eps3).then(|| (eps3 - input.delta_t).powf(1.0 / input.delta_h));
    let t_pass = t_max.is_some_and(|tm| input.horizon < tm);
    match t_max {
        None => failures.push(format!("(T): δ_T = {} is not below ε³ = {eps3}", input.delta_t)),
        Some(tm) if !t_pass => failures.push(format!("(T): T = {} is not below T_max = {tm}", input.horizon)),
        _ => {}
    }
    let delta_t_in_stated_range = input.delta_t < input.epsilon.powf(3.0 / input.delta_h);

    let ceiling = (1.0 - input.delta_h) / 3.0;
    let hurst: Vec<HurstVerdict> = input
        .hurst
        .iter()
        .map(|&h| HurstVerdict {
            hurst: h,
            ceiling,
            pass: h < ceiling,
        })
        .collect();
    for (k, v) in hurst.iter().enumerate() {
        if !v.pass {
            failures.push(format!("{h_tag}: H_{} = {} is not below (1 - δ_H)/3 = {ceiling}", k + 1, v.hurst));
        }
    }
    let h_pass = hurst.iter().all(|v| v.pass);

    let a_values = (1..=input.dim()).map(|j| compute_aj(input, j)).collect::<Result<Vec<_>>>()?;
    let a_sum: f64 = a_values.iter().sum();
    let a_pass = a_sum < 1.0;
    if !a_pass {
        failures.push(format!("{a_tag}: Σ A_j = {a_sum} is not below 1"));
    }

    let combined = input.horizon.powf(input.delta_h) * a_sum / eps3;
    let combined_pass = combined < 1.0;
    if !combined_pass {
        failures.push(format!("ε^-3 T^δ_H Σ A_j = {combined} is not below 1"));
    }
    let l1_ceilings = (1..=input.dim()).map(|j| l1_ceiling(input, j)).collect::<Result<Vec<_>>>()?;

    Ok(AssumptionReport {
        regime,
        t_max,
        t_pass,
        delta_t_in_stated_range,
        hurst,
        h_pass,
        a_values,
        a_sum,
        a_pass,
        combined,
        combined_pass,
        l1_ceilings,
        failures,
    })
}
