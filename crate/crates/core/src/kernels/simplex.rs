use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{arg_err, Result};
use crate::quadrature::TanhSinh;

/// `∫_{Δ^m_{θ,t}} Π_j (s_j - s_{j+1})^{a_j} ds` with `s_{m+1} = θ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexSpec {
    theta: f64,
    t: f64,
    a: Vec<f64>,
}

impl SimplexSpec {
    pub fn new(theta: f64, t: f64, a: Vec<f64>) -> Result<Self> {
        if !(theta.is_finite() && t.is_finite() && theta < t) {
            return arg_err(format!("need θ < t, got [{theta}, {t}]"));
        }
        if a.is_empty() {
            return arg_err("simplex dimension must be at least 1");
        }
        if let Some(bad) = a.iter().find(|&&x| !(x > -1.0 && x.is_finite())) {
            return arg_err(format!("exponent {bad} must exceed -1"));
        }
        Ok(Self { theta, t, a })
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }
}

/// `Π Γ(a_l + 1) / Γ(Σ a_l + m + 1) · (t - θ)^{Σ a_l + m}`, in log space.
pub fn simplex_integral_closed(spec: &SimplexSpec) -> f64 {
    let m = spec.m() as f64;
    let sum_a: f64 = spec.a.iter().sum();
    let log_num: f64 = spec.a.iter().map(|&x| ln_gamma(x + 1.0)).sum();
    let log = log_num - ln_gamma(sum_a + m + 1.0) + (sum_a + m) * (spec.t - spec.theta).ln();
    log.exp()
}

/// Independent quadrature route. In increment variables `u_j = s_j - s_{j+1}`
/// the integral is `F_m(t - θ)` with `F_0 = 1`,
/// `F_k(L) = ∫_0^L u^{a_k} F_{k-1}(L - u) du`; the substitution `u = L v`
/// shows `F_k(L) = F_k(1) L^{p_k}` with `p_k = Σ_{j≤k}(a_j + 1)`, leaving one
/// singular one-dimensional integral per level.
pub fn simplex_integral_quadrature(spec: &SimplexSpec, rel_tol: f64) -> f64 {
    let rule = TanhSinh {
        rel_tol,
        max_level: 10,
        ..TanhSinh::default()
    };
    let mut f_one = 1.0;
    let mut p = 0.0;
    for &a in spec.a.iter().rev() {
        // near either end use the cancellation-free endpoint distances
        let level = rule.integrate(|_, v, one_minus_v| v.powf(a) * one_minus_v.powf(p), 0.0, 1.0);
        f_one *= level;
        p += a + 1.0;
    }
    f_one * (spec.t - spec.theta).powf(p)
}
