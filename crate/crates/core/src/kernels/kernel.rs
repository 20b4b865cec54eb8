use crate::error::{arg_err, dim_err, Result};
use crate::segment::{chi_clamped, BasisSet};

fn check_point(j: &[usize], s: &[f64], theta: f64, basis: &BasisSet) -> Result<()> {
    if j.is_empty() || j.len() != s.len() {
        return dim_err(format!("{} indices for a point with {} coordinates", j.len(), s.len()));
    }
    if let Some(&bad) = j.iter().find(|&&i| i == 0 || i > basis.len()) {
        return arg_err(format!("basis index {bad} outside 1..={}", basis.len()));
    }
    let ordered = s.windows(2).all(|w| w[0] >= w[1]) && s[s.len() - 1] >= theta;
    if !ordered || s.iter().any(|x| !x.is_finite()) {
        return arg_err(format!("point {s:?} is not in the simplex above θ = {theta}"));
    }
    Ok(())
}

fn chain(j: &[usize], s: &[f64], basis: &BasisSet) -> f64 {
    (0..s.len() - 1).map(|l| chi_clamped(j[l], s[l + 1] - s[l], basis)).product()
}

/// `𝓗_j(θ, s) = χ_{j_m}(θ - s_m) Π_{l<m} χ_{j_l}(s_{l+1} - s_l)` for
/// `θ ≤ s_m ≤ … ≤ s_1`; `j` is 1-based. Arguments below `-r` saturate.
pub fn h_kernel(j: &[usize], s: &[f64], theta: f64, basis: &BasisSet) -> Result<f64> {
    check_point(j, s, theta, basis)?;
    let m = s.len();
    Ok(chi_clamped(j[m - 1], theta - s[m - 1], basis) * chain(j, s, basis))
}

/// `𝓗̃`: the last factor of [`h_kernel`] replaced by
/// `χ_{j_m}(θ - s_m) - χ_{j_m}(θ' - s_m)`. A positive `θ' - s_m` saturates at 0.
pub fn h_tilde_kernel(j: &[usize], s: &[f64], theta: f64, theta_p: f64, basis: &BasisSet) -> Result<f64> {
    check_point(j, s, theta, basis)?;
    if !theta_p.is_finite() {
        return arg_err("θ' must be finite");
    }
    let m = s.len();
    let last = chi_clamped(j[m - 1], theta - s[m - 1], basis) - chi_clamped(j[m - 1], theta_p - s[m - 1], basis);
    Ok(last * chain(j, s, basis))
}
