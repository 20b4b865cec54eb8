//! Discretised Delfour–Mitter space `M2 = R × L²([-r, 0])`.
//!
//! An element is a point value `x(0)` together with a history function sampled
//! at the `K + 1` uniform nodes `u_k = -r + k r / K`. Integrals over `[-r, 0]`
//! use the composite trapezoid rule on that grid.
//!
//! The orthonormal basis is `e_1 = (1, 0)` followed by `(0, ψ_k)` with
//! `ψ_1 = 1/√r` and `ψ_k(u) = √(2/r) cos((k-1)π(u + r)/r)`. Cosines of
//! frequency below `K` are exactly orthonormal under the trapezoid rule, so the
//! discrete Gram matrix is the identity up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, dim_err, Result};
use crate::quadrature::trapezoid_weights;

/// Relative slack used when checking that a time lies on a grid.
const GRID_TOL: f64 = 1e-9;

/// Returns `Some(k)` when `x / step` is within rounding of the integer `k`.
pub(crate) fn grid_index(x: f64, step: f64) -> Option<usize> {
    if step <= 0.0 || x < -GRID_TOL * step {
        return None;
    }
    let q = x / step;
    let k = q.round();
    if (q - k).abs() <= GRID_TOL * q.abs().max(1.0) {
        Some(k as usize)
    } else {
        None
    }
}

/// An element `(x(0), x(·))` of the discretised segment space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2Element {
    point: f64,
    hist: Vec<f64>,
    r: f64,
}

impl M2Element {
    pub fn new(point: f64, hist: Vec<f64>, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return arg_err(format!("delay length must be positive, got {r}"));
        }
        if hist.len() < 3 {
            return arg_err(format!("history needs at least 3 samples, got {}", hist.len()));
        }
        if !point.is_finite() || hist.iter().any(|v| !v.is_finite()) {
            return arg_err("M2 element entries must be finite");
        }
        Ok(Self { point, hist, r })
    }

    /// Samples `f` on the `K + 1` history nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(point: f64, r: f64, k: usize, f: F) -> Result<Self> {
        let h = r / k as f64;
        let hist = (0..=k).map(|j| f(-r + j as f64 * h)).collect();
        Self::new(point, hist, r)
    }

    pub fn zero(r: f64, k: usize) -> Result<Self> {
        Self::new(0.0, vec![0.0; k + 1], r)
    }

    /// Constant segment `(c, u ↦ c)`.
    pub fn constant(c: f64, r: f64, k: usize) -> Result<Self> {
        Self::new(c, vec![c; k + 1], r)
    }

    pub fn point(&self) -> f64 {
        self.point
    }

    pub fn hist(&self) -> &[f64] {
        &self.hist
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Number of grid cells `K`.
    pub fn k(&self) -> usize {
        self.hist.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.r / self.k() as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.r + j as f64 * self.spacing()
    }

    pub fn norm(&self) -> f64 {
        m2_inner(self, self).map(f64::sqrt).unwrap_or(f64::NAN)
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.hist.len() == other.hist.len() && (self.r - other.r).abs() <= GRID_TOL * self.r
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return dim_err("M2 elements live on different grids");
        }
        let hist = self.hist.iter().zip(&other.hist).map(|(x, y)| a * x + b * y).collect();
        Self::new(a * self.point + b * other.point, hist, self.r)
    }
}

/// `x(0) y(0) + ∫_{-r}^0 x(u) y(u) du` with the trapezoid rule.
pub fn m2_inner(x: &M2Element, y: &M2Element) -> Result<f64> {
    if !x.same_grid(y) {
        return dim_err(format!(
            "M2 grids differ: (r={}, K={}) vs (r={}, K={})",
            x.r,
            x.k(),
            y.r,
            y.k()
        ));
    }
    let h = x.spacing();
    let k = x.k();
    let mut acc = 0.5 * (x.hist[0] * y.hist[0] + x.hist[k] * y.hist[k]);
    for j in 1..k {
        acc += x.hist[j] * y.hist[j];
    }
    Ok(x.point * y.point + h * acc)
}

/// Ordered orthonormal family `e_1, …, e_D` of the discretised space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisSet {
    elements: Vec<M2Element>,
    r: f64,
    k: usize,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Basis element by zero-based position (`get(0)` is `e_1`).
    pub fn get(&self, idx: usize) -> &M2Element {
        &self.elements[idx]
    }

    pub fn elements(&self) -> &[M2Element] {
        &self.elements
    }

    /// Coefficient vector `(<x, e_1>, …, <x, e_d>)`.
    pub fn coefficients(&self, x: &M2Element, d: usize) -> Result<Vec<f64>> {
        if d > self.len() {
            return arg_err(format!("requested {d} coefficients from a basis of size {}", self.len()));
        }
        self.elements[..d].iter().map(|e| m2_inner(x, e)).collect()
    }

    /// Reconstruct `Σ c_i e_i`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<M2Element> {
        if coeffs.len() > self.len() {
            return dim_err("more coefficients than basis elements");
        }
        let mut out = M2Element::zero(self.r, self.k)?;
        for (c, e) in coeffs.iter().zip(&self.elements) {
            out = out.combine(1.0, e, *c)?;
        }
        Ok(out)
    }

    /// Discrete Gram matrix `<e_i, e_j>`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.elements
            .iter()
            .map(|a| self.elements.iter().map(|b| m2_inner(a, b).unwrap_or(f64::NAN)).collect())
            .collect()
    }

    /// Per-node trapezoid weight times the history of `e_idx`; used by the
    /// solver to turn a segment window into a coefficient with one dot product.
    pub(crate) fn weighted_hist(&self, idx: usize) -> Vec<f64> {
        let w = trapezoid_weights(self.k, self.r / self.k as f64);
        w.iter().zip(self.elements[idx].hist()).map(|(a, b)| a * b).collect()
    }
}

/// Builds `e_1 = (1, 0)` and `e_{k+1} = (0, ψ_k)` (cosine family).
pub fn build_basis(r: f64, count: usize, k: usize) -> Result<BasisSet> {
    if count < 1 {
        return arg_err("basis needs at least one element");
    }
    if k < 2 {
        return arg_err(format!("history grid needs K >= 2, got {k}"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return arg_err(format!("delay length must be positive, got {r}"));
    }
    // Frequencies 0..K-1 are trapezoid-orthogonal; frequency K is not normalised.
    if count > k + 1 {
        return arg_err(format!("K = {k} resolves at most {} basis elements, asked for {count}", k + 1));
    }
    let mut elements = Vec::with_capacity(count);
    elements.push(M2Element::new(1.0, vec![0.0; k + 1], r)?);
    for idx in 1..count {
        let freq = (idx - 1) as f64;
        let e = if idx == 1 {
            M2Element::from_fn(0.0, r, k, |_| 1.0 / r.sqrt())?
        } else {
            let amp = (2.0 / r).sqrt();
            M2Element::from_fn(0.0, r, k, |u| amp * (freq * std::f64::consts::PI * (u + r) / r).cos())?
        };
        elements.push(e);
    }
    Ok(BasisSet { elements, r, k })
}

/// Solver/segment grid compatibility: the delay must be a whole number of
/// solver steps so segments never need interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentGridConfig {
    pub dt: f64,
    pub r: f64,
    pub k: usize,
    pub constrained: bool,
}

impl SegmentGridConfig {
    pub fn new(dt: f64, r: f64) -> Result<Self> {
        if !(dt > 0.0 && r > 0.0) {
            return arg_err("step and delay must be positive");
        }
        match grid_index(r, dt) {
            Some(k) if k >= 2 => Ok(Self {
                dt,
                r,
                k,
                constrained: true,
            }),
            _ => arg_err(format!("delay {r} is not a multiple (>= 2) of the step {dt}")),
        }
    }
}

/// `χ_j(z) = <(1, 1_{[z,0]}), e_j>` for `z ∈ [-r, 0]`; `j` is 1-based.
///
/// The indicator is integrated exactly against the piecewise-linear
/// interpolant of `e_j`'s history, so `χ_j` is continuous in `z` and agrees
/// with the trapezoid inner product whenever `z` is a grid node.
pub fn chi(j: usize, z: f64, basis: &BasisSet) -> Result<f64> {
    let r = basis.r();
    if !(-r - GRID_TOL * r..=0.0).contains(&z) {
        return arg_err(format!("chi argument {z} outside [-{r}, 0]"));
    }
    Ok(chi_clamped(j, z, basis))
}

/// `χ_j` with the argument saturated to `[-r, 0]`; out-of-range `j` panics.
pub(crate) fn chi_clamped(j: usize, z: f64, basis: &BasisSet) -> f64 {
    assert!(j >= 1 && j <= basis.len(), "basis index {j} out of range");
    let e = basis.get(j - 1);
    let r = basis.r();
    let z = z.clamp(-r, 0.0);
    let h = e.spacing();
    let k = e.k();
    let hist = e.hist();
    let pos = (z + r) / h;
    let cell = (pos.floor() as usize).min(k - 1);
    let frac = pos - cell as f64;

    let mut acc = 0.0;
    // full cells to the right of the boundary cell
    for c in (cell + 1)..k {
        acc += 0.5 * h * (hist[c] + hist[c + 1]);
    }
    // covered part [z, u_{cell+1}] of the boundary cell, linear interpolant
    let left = hist[cell];
    let right = hist[cell + 1];
    let vz = left + frac * (right - left);
    acc += 0.5 * (1.0 - frac) * h * (vz + right);
    e.point() + acc
}

/// Segment `x_t = (x(t), u ↦ x(t + u))` of a grid path.
///
/// `path[k]` is `x(k·dt)`; negative times read from `eta`, except that
/// `x(0)` is always `path[0]`.
pub fn segment_extract(path: &[f64], dt: f64, t: f64, eta: &M2Element) -> Result<M2Element> {
    if path.is_empty() {
        return arg_err("empty path");
    }
    let cfg = SegmentGridConfig::new(dt, eta.r())?;
    if cfg.k != eta.k() {
        return arg_err(format!("history grid K = {} does not match r/dt = {}", eta.k(), cfg.k));
    }
    let idx = grid_index(t, dt).ok_or_else(|| crate::SddeError::Argument(format!("t = {t} is not on the solver grid")))?;
    if idx >= path.len() {
        return arg_err(format!("t = {t} lies beyond the path horizon"));
    }
    Ok(segment_at(path, idx, eta))
}

/// Grid-index version of [`segment_extract`] without validation.
pub(crate) fn segment_at(path: &[f64], idx: usize, eta: &M2Element) -> M2Element {
    let k = eta.k();
    let hist = (0..=k)
        .map(|j| {
            let s = idx as isize - k as isize + j as isize;
            if s >= 0 {
                path[s as usize]
            } else {
                eta.hist()[(s + k as isize) as usize]
            }
        })
        .collect();
    M2Element {
        point: path[idx],
        hist,
        r: eta.r(),
    }
}

/// The coefficient functional
///
/// ```text
/// F_i(t, φ) = η(0)e_i(0) + ∫(1_{t+u<0} η(t+u) + 1_{t+u≥0} η(0)) e_i(u) du
///           + φ(0)e_i(0) + ∫ 1_{t+u≥0} φ(u) e_i(u) du
/// ```
///
/// so that `<x_t, e_i> = F_i(t, W_t)` whenever `x = η(0) + W` on `[0, T]`.
/// `t` must be a multiple of the history spacing or exceed `r`.
pub fn segment_functional_f(i: usize, t: f64, phi: &M2Element, eta: &M2Element, basis: &BasisSet) -> Result<f64> {
    if i < 1 || i > basis.len() {
        return arg_err(format!("basis index {i} out of range 1..={}", basis.len()));
    }
    let e = basis.get(i - 1);
    if !phi.same_grid(e) || !eta.same_grid(e) {
        return dim_err("F_i arguments must share the basis grid");
    }
    if t < 0.0 {
        return arg_err("F_i needs t >= 0");
    }
    let h = e.spacing();
    let k = e.k();
    // number of history nodes that fall at negative absolute time
    let shift = if t >= e.r() {
        k + 1
    } else {
        grid_index(t, h).ok_or_else(|| crate::SddeError::Argument(format!("t = {t} is not aligned with the history grid")))?
    };
    let weights = trapezoid_weights(k, h);
    let eta0 = eta.point();
    let mut integral = 0.0;
    for j in 0..=k {
        // t + u_j = (shift + j - K) h
        let before_zero = shift + j < k;
        let v = if before_zero {
            eta.hist()[shift + j]
        } else {
            eta0 + phi.hist()[j]
        };
        integral += weights[j] * v * e.hist()[j];
    }
    Ok((eta0 + phi.point()) * e.point() + integral)
}
