//! One-dimensional quadrature rules.
//!
//! [`TanhSinh`] is a double-exponential rule that tolerates integrable
//! power-law singularities at either endpoint. The integrand is handed the
//! abscissa together with its distances to both endpoints, computed without
//! cancellation, so factors like `(b - x)^{-0.9}` stay accurate right up to the
//! boundary.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

const MAX_LEVEL: usize = 10;
const T_MAX: f64 = 6.5;

struct Node {
    t: f64,
    weight: f64,
    /// `1 - tanh(π/2 sinh t)`, computed directly.
    one_minus: f64,
}

/// Node table: level 0 holds `t = 0, 1, 2, ...`; level `l > 0` holds the odd
/// multiples of `2^-l`.
fn node_table() -> &'static [Vec<Node>] {
    static TABLE: OnceLock<Vec<Vec<Node>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut levels = Vec::with_capacity(MAX_LEVEL + 1);
        for level in 0..=MAX_LEVEL {
            let h = 0.5_f64.powi(level as i32);
            let (start, step) = if level == 0 { (0usize, 1usize) } else { (1, 2) };
            let mut nodes = Vec::new();
            let mut k = start;
            loop {
                let t = k as f64 * h;
                if t > T_MAX {
                    break;
                }
                let u = FRAC_PI_2 * t.sinh();
                let cu = u.cosh();
                nodes.push(Node {
                    t,
                    weight: FRAC_PI_2 * t.cosh() / (cu * cu),
                    one_minus: (-u).exp() / cu,
                });
                k += step;
            }
            levels.push(nodes);
        }
        levels
    })
}

/// Double-exponential (tanh-sinh) quadrature with level doubling.
#[derive(Debug, Clone, Copy)]
pub struct TanhSinh {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_level: usize,
    pub max_level: usize,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            min_level: 3,
            max_level: 8,
        }
    }
}

impl TanhSinh {
    pub fn with_tolerance(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrate `f(x, x - a, b - x)` over `[a, b]`.
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> f64
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        if b <= a {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let mid = a + half;
        let table = node_table();
        let max_level = self.max_level.min(MAX_LEVEL);

        let mut sum = 0.0;
        let mut prev = f64::NAN;
        for (level, nodes) in table.iter().enumerate().take(max_level + 1) {
            let h = 0.5_f64.powi(level as i32);
            for node in nodes {
                if node.t == 0.0 {
                    sum += node.weight * f(mid, half, half);
                    continue;
                }
                let near = half * node.one_minus;
                if near <= f64::MIN_POSITIVE {
                    break;
                }
                let far = half * (2.0 - node.one_minus);
                let right = f(b - near, far, near);
                let left = f(a + near, near, far);
                let term = node.weight * (right + left);
                if !term.is_finite() {
                    break;
                }
                sum += term;
                if node.t > 2.0 && term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
            }
            let est = h * half * sum;
            if level >= self.min_level && (est - prev).abs() <= self.rel_tol * est.abs() + self.abs_tol {
                return est;
            }
            prev = est;
        }
        prev
    }

    /// Plain `f(x)` convenience wrapper.
    pub fn integrate_fn<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.integrate(|x, _, _| f(x), a, b)
    }

    /// Integrate over `[a, b]` split at the interior `breaks` (unsorted input is fine).
    pub fn integrate_pieces<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        let mut lo = a;
        let mut total = 0.0;
        for hi in cuts.into_iter().chain(std::iter::once(b)) {
            total += self.integrate(|x, _, _| f(x), lo, hi);
            lo = hi;
        }
        total
    }
}

/// Composite trapezoid weights for `k + 1` equispaced nodes with spacing `h`.
pub fn trapezoid_weights(k: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; k + 1];
    w[0] = 0.5 * h;
    w[k] = 0.5 * h;
    w
}
