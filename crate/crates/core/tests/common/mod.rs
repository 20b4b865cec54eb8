//! Independent numerical oracles shared by the integration tests. Nothing
//! here calls into the crate's own quadrature.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for n in 2..=k {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if k == 1 { x } else { p1 };
            let pm = if k == 1 { 1.0 } else { p0 };
            dp = k as f64 * (x * p - pm) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `∫_{a ≤ s_m < … < s_1 ≤ b} f(s) ds` by nested `k`-point Gauss–Legendre;
/// exact for polynomials of degree `≤ 2k - 1` in each mapped variable.
pub fn nested_simplex_gl(f: &dyn Fn(&[f64]) -> f64, dim: usize, a: f64, b: f64, k: usize) -> f64 {
    let (x, w) = gauss_legendre(k);
    let mut s = vec![0.0; dim];
    fn rec(level: usize, upper: f64, a: f64, s: &mut Vec<f64>, f: &dyn Fn(&[f64]) -> f64, x: &[f64], w: &[f64]) -> f64 {
        if level == s.len() {
            return f(s);
        }
        let half = 0.5 * (upper - a);
        let mid = 0.5 * (upper + a);
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s[level] = mid + half * xi;
            acc += wi * half * rec(level + 1, s[level], a, s, f, x, w);
        }
        acc
    }
    rec(0, b, a, &mut s, f, &x, &w)
}

/// Fixed-step tanh-sinh on `[0, 1]` for `g(v, 1 - v)`, with the step halved
/// until two successive sums agree.
pub fn tanh_sinh_unit(g: &dyn Fn(f64, f64) -> f64) -> f64 {
    let eval = |h: f64| {
        let mut sum = 0.0;
        let mut j: i64 = -((7.0 / h) as i64);
        while (j as f64) * h <= 7.0 {
            let t = j as f64 * h;
            let u = 0.5 * PI * t.sinh();
            let c = u.cosh();
            // v = (1 + tanh u)/2, written through e^{-2|u|} to keep both gaps exact
            let e = (-2.0 * u.abs()).exp();
            let small = e / (1.0 + e);
            let (v, one_minus) = if u >= 0.0 { (1.0 - small, small) } else { (small, 1.0 - small) };
            let wt = 0.5 * 0.5 * PI * t.cosh() / (c * c);
            if small > 0.0 && wt.is_finite() {
                let val = g(v, one_minus);
                if val.is_finite() {
                    sum += wt * val;
                }
            }
            j += 1;
        }
        sum * h
    };
    let mut h = 0.25;
    let mut prev = eval(h);
    for _ in 0..8 {
        h *= 0.5;
        let next = eval(h);
        if (next - prev).abs() <= 1e-13 * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

/// `∫_{Δ^m_{θ,t}} Π (s_j - s_{j+1})^{a_j}` through the increment recursion
/// `F_k(L) = ∫_0^L u^{a_k} F_{k-1}(L - u) du`, scale invariance reducing each
/// level to a Beta-type integral on `[0, 1]`.
pub fn simplex_oracle(a: &[f64], theta: f64, t: f64) -> f64 {
    let mut value = 1.0;
    let mut p = 0.0;
    for &ak in a.iter().rev() {
        let pk = p;
        value *= tanh_sinh_unit(&|v, w| v.powf(ak) * w.powf(pk));
        p += ak + 1.0;
    }
    value * (t - theta).powf(p)
}

/// Monte Carlo mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}
