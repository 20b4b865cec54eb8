use rand::Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::kernels::{
    double_shuffle_map, h_kernel, h_tilde_kernel, shuffle_product_check, shuffle_square_check, shuffles, simplex_integral_closed, simplex_integral_quadrature, Monomial,
    SimplexSpec, PRODUCT_CAP,
};
use crate::noise::{estimate_sln_constant, stream_rng};
use crate::segment::{build_basis, SegmentGridConfig};

/// Names accepted by `--suite`.
pub const SUITES: [&str; 6] = ["shuffle", "square", "inverse", "simplex", "kernel", "sln"];

/// Stream reserved for the verification suite's random probes.
const VERIFY_PATH: u64 = 1 << 40;

const SHUFFLE_TOL: f64 = 1e-10;
const SIMPLEX_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn below(suite: &str, name: String, value: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.to_string(),
            name,
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suites: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub failed: usize,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.failed == 0
    }
}

/// All exponent vectors in `{0, …, max_exp}^k`.
fn exponent_vectors(k: usize, max_exp: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                (0..=max_exp).map(move |e| {
                    let mut w = v.clone();
                    w.push(e);
                    w
                })
            })
            .collect();
    }
    out
}

fn shuffle_suite() -> Result<Vec<CheckResult>> {
    let (theta, t) = (0.25, 1.0);
    let mut out = Vec::new();
    for total in 2..=PRODUCT_CAP {
        for m in 1..total {
            let mut worst: f64 = 0.0;
            for exps in exponent_vectors(total, 2) {
                let f = Monomial::new(exps[..m].to_vec());
                let g = Monomial::new(exps[m..].to_vec());
                worst = worst.max(shuffle_product_check(&f, &g, theta, t)?.residual);
            }
            out.push(CheckResult::below("shuffle", format!("product m={m} n={}", total - m), worst, SHUFFLE_TOL));
        }
    }
    Ok(out)
}

fn square_suite() -> Result<Vec<CheckResult>> {
    let (theta, theta_p, t) = (0.1, 0.4, 1.0);
    let mut out = Vec::new();
    for total in 2..=PRODUCT_CAP {
        for m in 1..total {
            let mut worst: f64 = 0.0;
            for exps in exponent_vectors(total, 1) {
                worst = worst.max(shuffle_square_check(&Monomial::new(exps), m, theta, theta_p, t)?.residual);
            }
            out.push(CheckResult::below("square", format!("squared m={m} n={}", total - m), worst, SHUFFLE_TOL));
        }
    }
    Ok(out)
}

fn inverse_suite() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for m in 1..=3 {
        for n in 1..=3 {
            let mut bad = 0usize;
            for sigma in &shuffles(m, m)?.maps {
                for tau in &shuffles(n, n)?.maps {
                    let map = double_shuffle_map(sigma, tau, m, n);
                    let mut inverse = vec![0usize; map.len() + 1];
                    for (pos, &v) in map.iter().enumerate() {
                        inverse[v] = pos + 1;
                    }
                    if inverse[1..].contains(&0) {
                        bad += 1;
                        continue;
                    }
                    let first_block = |p: usize| p <= m || (m + n < p && p <= 2 * m + n);
                    let ok = (1..=2 * (m + n)).all(|l| first_block(inverse[l]) == (l <= 2 * m));
                    bad += usize::from(!ok);
                }
            }
            out.push(CheckResult::below("inverse", format!("membership m={m} n={n}"), bad as f64, 0.0));
        }
    }
    Ok(out)
}

fn simplex_suite(cfg: &ExperimentConfig, fault: f64) -> Result<Vec<CheckResult>> {
    let (theta, t) = (0.0, 1.0);
    let mut cases: Vec<Vec<f64>> = Vec::new();
    let ceiling = (1.0 - cfg.assumptions.delta_h) / 3.0;
    let mut hursts = vec![0.05, 0.1, 0.15];
    hursts.extend(cfg.noise.hurst.iter().copied());
    for h in hursts.into_iter().filter(|&h| h < ceiling) {
        for m in 1..=4 {
            cases.push(vec![-3.0 * h; m]);
        }
    }
    cases.push(vec![-0.3; 3]);
    cases.push(vec![-0.9, 2.0]);
    cases.push(vec![2.0, -0.5, 0.7, -0.85]);
    cases.push(vec![1.0, 0.0, -0.6, 1.5]);

    let mut out = Vec::new();
    for a in cases {
        let spec = SimplexSpec::new(theta, t, a.clone())?;
        let closed = simplex_integral_closed(&spec) * (1.0 + fault);
        let quad = simplex_integral_quadrature(&spec, 1e-12);
        out.push(CheckResult::below("simplex", format!("closed vs quadrature a={a:?}"), ((closed - quad) / quad).abs(), SIMPLEX_TOL));
    }
    for m in 1..=4 {
        let spec = SimplexSpec::new(0.5, 2.0, vec![0.0; m])?;
        let closed = simplex_integral_closed(&spec) * (1.0 + fault);
        let volume = 1.5_f64.powi(m as i32) / (1..=m).product::<usize>() as f64;
        out.push(CheckResult::below("simplex", format!("volume m={m}"), ((closed - volume) / volume).abs(), 1e-13));
    }
    Ok(out)
}

fn kernel_suite(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let r = cfg.solver.r;
    let k = SegmentGridConfig::new(cfg.solver.dt, r)?.k;
    let count = (k + 1).min(4);
    let basis = build_basis(r, count, k)?;
    let span = cfg.solver.horizon.max(2.0 * r);
    let mut rng = stream_rng(cfg.seed, VERIFY_PATH, 0);
    let (mut worst_h, mut worst_ht) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..cfg.verify.kernel_samples {
        let m = rng.random_range(1..=4usize);
        let theta = rng.random_range(0.0..span);
        let t = theta + rng.random_range(0.0..span);
        let mut s: Vec<f64> = (0..m).map(|_| rng.random_range(theta..=t)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let j: Vec<usize> = (0..m).map(|_| rng.random_range(1..=count)).collect();
        let theta_p = rng.random_range(0.0..=t);
        let h = h_kernel(&j, &s, theta, &basis)?;
        let ht = h_tilde_kernel(&j, &s, theta, theta_p, &basis)?;
        // margins: positive means the bound is violated
        worst_h = worst_h.max(h.abs() - (1.0 + r).powi(m as i32));
        worst_ht = worst_ht.max(ht.abs() - (1.0 + r).powi(m as i32 - 1) * (theta - theta_p).abs().sqrt());
    }
    if cfg.verify.kernel_samples == 0 {
        return Ok(Vec::new());
    }
    Ok(vec![
        CheckResult::below("kernel", "|H| <= (1+r)^m".into(), worst_h, 0.0),
        CheckResult::below("kernel", "|H~| <= (1+r)^(m-1) |θ-θ'|^(1/2)".into(), worst_ht, 1e-14),
    ])
}

fn sln_suite(cfg: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let span = cfg.solver.horizon;
    let mut out = Vec::new();
    for m in [2, 10, 50] {
        let c = estimate_sln_constant(0.5, m, span)?.c_hat;
        out.push(CheckResult::below("sln", format!("C(1/2) = 1 with m={m}"), (c - 1.0).abs(), 0.0));
    }
    for h in [0.1, 0.25, 0.45] {
        let c = estimate_sln_constant(h, cfg.noise.sln_grid_points.max(2), span)?.c_hat;
        // distance outside (0, 1]
        let outside = if c > 0.0 { (c - 1.0).max(0.0) } else { 1.0 - c };
        out.push(CheckResult::below("sln", format!("C({h}) in (0, 1]"), outside, 0.0));
    }
    Ok(out)
}

/// Runs the selected exact-identity suites; `None` selects all of them.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let selected: Vec<String> = match &cfg.verify.suites {
        Some(s) => s.clone(),
        None => SUITES.iter().map(|s| s.to_string()).collect(),
    };
    let fault = cfg.verify.inject_fault.unwrap_or(0.0);
    let mut checks = Vec::new();
    for suite in &selected {
        let mut part = match suite.as_str() {
            "shuffle" => shuffle_suite()?,
            "square" => square_suite()?,
            "inverse" => inverse_suite()?,
            "simplex" => simplex_suite(cfg, fault)?,
            "kernel" => kernel_suite(cfg)?,
            "sln" => sln_suite(cfg)?,
            other => unreachable!("suite '{other}' passed validation"),
        };
        checks.append(&mut part);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    Ok(VerifyReport {
        suites: selected,
        checks,
        failed,
    })
}
