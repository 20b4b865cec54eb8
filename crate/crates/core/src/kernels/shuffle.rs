use itertools::Itertools;
use serde::Serialize;

use crate::error::{arg_err, Result};

/// Largest `m + n` accepted by [`shuffles`].
pub const SHUFFLE_CAP: usize = 12;
/// Largest `m + n` accepted by the product checks.
pub const PRODUCT_CAP: usize = 6;

/// The shuffle permutations `S(m, n)`, stored 1-based: `maps[k][i - 1] = σ(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShuffleSet {
    pub m: usize,
    pub n: usize,
    pub maps: Vec<Vec<usize>>,
}

impl ShuffleSet {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// All `σ` on `{1..m+n}` increasing on `{1..m}` and on `{m+1..m+n}`, in
/// lexicographic order of `(σ(1), …, σ(m+n))`.
pub fn shuffles(m: usize, n: usize) -> Result<ShuffleSet> {
    if m == 0 || n == 0 {
        return arg_err(format!("shuffle blocks must be nonempty, got ({m}, {n})"));
    }
    if m + n > SHUFFLE_CAP {
        return arg_err(format!("m + n = {} exceeds the enumeration cap {SHUFFLE_CAP}", m + n));
    }
    // σ is fixed by its first block; the second block is the complement
    let maps = (1..=m + n)
        .combinations(m)
        .map(|first| {
            let rest = (1..=m + n).filter(|v| !first.contains(v));
            first.iter().copied().chain(rest).collect()
        })
        .collect();
    Ok(ShuffleSet { m, n, maps })
}

/// The combined map `(σ, τ)` on `{1..2m+2n}` for `σ ∈ S(m,m)`, `τ ∈ S(n,n)`.
/// Positions `1..m+n` and `m+n+1..2m+2n` are the two copies of the
/// integrand's arguments; values `1..2m` index variables on `Δ^{2m}_{θ',t}`,
/// values `2m+1..2m+2n` those on `Δ^{2n}_{θ,θ'}`.
pub fn double_shuffle_map(sigma: &[usize], tau: &[usize], m: usize, n: usize) -> Vec<usize> {
    debug_assert_eq!(sigma.len(), 2 * m);
    debug_assert_eq!(tau.len(), 2 * n);
    (1..=2 * (m + n))
        .map(|i| {
            if i <= m {
                sigma[i - 1]
            } else if i <= m + n {
                2 * m + tau[i - m - 1]
            } else if i <= 2 * m + n {
                sigma[i - n - 1]
            } else {
                2 * m + tau[i - 2 * m - 1]
            }
        })
        .collect()
}

/// Product monomial `f(s_1, …, s_k) = Π s_j^{exps[j-1]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Monomial {
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Self { exps }
    }

    /// The constant 1 in `k` variables.
    pub fn one(k: usize) -> Self {
        Self { exps: vec![0; k] }
    }

    pub fn arity(&self) -> usize {
        self.exps.len()
    }

    pub fn eval(&self, s: &[f64]) -> f64 {
        self.exps.iter().zip(s).map(|(&e, &x)| x.powi(e as i32)).product()
    }
}

/// Both sides of a shuffle identity and their gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShuffleCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub terms: usize,
}

impl ShuffleCheck {
    fn new(lhs: f64, rhs: f64, terms: usize) -> Self {
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            terms,
        }
    }
}

/// Polynomial in `u = s - a` with ascending coefficients.
fn shifted_power(e: u32, a: f64) -> Vec<f64> {
    // (u + a)^e
    let mut c = vec![1.0];
    for _ in 0..e {
        let mut next = vec![0.0; c.len() + 1];
        for (k, &v) in c.iter().enumerate() {
            next[k + 1] += v;
            next[k] += a * v;
        }
        c = next;
    }
    c
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn poly_antiderivative(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (k, &v) in p.iter().enumerate() {
        out[k + 1] = v / (k + 1) as f64;
    }
    out
}

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `∫_{Δ^N_{a,b}} Π s_i^{e_i} ds` with `a ≤ s_N < … < s_1 ≤ b`, evaluated
/// exactly by integrating the chain from the innermost variable outwards.
pub fn simplex_monomial_integral(exps: &[u32], a: f64, b: f64) -> f64 {
    let mut inner = vec![1.0];
    for &e in exps.iter().rev() {
        inner = poly_antiderivative(&poly_mul(&shifted_power(e, a), &inner));
    }
    poly_eval(&inner, b - a)
}

fn check_interval(theta: f64, t: f64) -> Result<()> {
    if !(theta.is_finite() && t.is_finite() && theta < t) {
        return arg_err(format!("need θ < t, got [{theta}, {t}]"));
    }
    Ok(())
}

/// `(∫_{Δ^m} f)(∫_{Δ^n} g)` against `Σ_{σ∈S(m,n)} ∫_{Δ^{m+n}} f(s_σ(1..m)) g(s_σ(m+1..m+n))`.
pub fn shuffle_product_check(f: &Monomial, g: &Monomial, theta: f64, t: f64) -> Result<ShuffleCheck> {
    check_interval(theta, t)?;
    let (m, n) = (f.arity(), g.arity());
    if m + n > PRODUCT_CAP {
        return arg_err(format!("m + n = {} exceeds the product-check cap {PRODUCT_CAP}", m + n));
    }
    let set = shuffles(m, n)?;
    let lhs = simplex_monomial_integral(&f.exps, theta, t) * simplex_monomial_integral(&g.exps, theta, t);
    let mut rhs = 0.0;
    let mut exps = vec![0u32; m + n];
    for sigma in &set.maps {
        for (pos, &var) in sigma.iter().enumerate() {
            exps[var - 1] = if pos < m { f.exps[pos] } else { g.exps[pos - m] };
        }
        rhs += simplex_monomial_integral(&exps, theta, t);
    }
    Ok(ShuffleCheck::new(lhs, rhs, set.len()))
}

/// Squared integral over `Δ^m_{θ',t} × Δ^n_{θ,θ'}` against the double
/// shuffle sum over `Δ^{2m}_{θ',t} × Δ^{2n}_{θ,θ'}`; `f` has `m + n` arguments.
pub fn shuffle_square_check(f: &Monomial, m: usize, theta: f64, theta_p: f64, t: f64) -> Result<ShuffleCheck> {
    check_interval(theta, theta_p)?;
    check_interval(theta_p, t)?;
    let total = f.arity();
    if m == 0 || m >= total {
        return arg_err(format!("split m = {m} must leave both blocks nonempty for {total} arguments"));
    }
    if total > PRODUCT_CAP {
        return arg_err(format!("m + n = {total} exceeds the product-check cap {PRODUCT_CAP}"));
    }
    let n = total - m;
    let once = simplex_monomial_integral(&f.exps[..m], theta_p, t) * simplex_monomial_integral(&f.exps[m..], theta, theta_p);
    let lhs = once * once;

    let s_mm = shuffles(m, m)?;
    let s_nn = shuffles(n, n)?;
    let mut rhs = 0.0;
    let mut exps = vec![0u32; 2 * total];
    for sigma in &s_mm.maps {
        for tau in &s_nn.maps {
            let map = double_shuffle_map(sigma, tau, m, n);
            for (pos, &var) in map.iter().enumerate() {
                exps[var - 1] = f.exps[pos % total];
            }
            rhs += simplex_monomial_integral(&exps[..2 * m], theta_p, t) * simplex_monomial_integral(&exps[2 * m..], theta, theta_p);
        }
    }
    Ok(ShuffleCheck::new(lhs, rhs, s_mm.len() * s_nn.len()))
}
