//! Singular drifts `b(x) = Σ_i b_i(<x, e_i>)`, their mollifications
//! `b_{i,n} = b_i * φ_n` and the finite-dimensional truncations `b^d`.
//!
//! Components are bounded, integrable and compactly supported scalar
//! functions from a small built-in library. Norms are computed by quadrature
//! over the smooth pieces. Mollified components are tabulated together with
//! their derivatives and evaluated by cubic Hermite interpolation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, dim_err, Result};
use crate::quadrature::TanhSinh;

/// Nodes in each mollified table.
pub const TABLE_POINTS: usize = 2048;

/// Shape of a drift component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Zero,
    /// `height · 1_{[lo, hi)}`.
    Indicator { lo: f64, hi: f64, height: f64 },
    /// `values[k]` on `[breaks[k], breaks[k+1])`, zero outside.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// `teeth` equal cells on `[lo, hi)` alternating `+height`, `-height`.
    Comb { lo: f64, hi: f64, teeth: usize, height: f64 },
    /// `height · (1 - |z - center| / half_width)_+`.
    Tent { center: f64, half_width: f64, height: f64 },
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Shape::Zero => Ok(()),
            Shape::Indicator { lo, hi, height } => {
                if !finite(&[*lo, *hi, *height]) || lo >= hi {
                    return arg_err(format!("indicator needs finite lo < hi, got [{lo}, {hi})"));
                }
                Ok(())
            }
            Shape::PiecewiseConstant { breaks, values } => {
                if breaks.len() < 2 || values.len() + 1 != breaks.len() {
                    return arg_err("piecewise constant needs n+1 breaks for n values");
                }
                if !finite(breaks) || !finite(values) || breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return arg_err("breaks must be finite and strictly increasing");
                }
                Ok(())
            }
            Shape::Comb { lo, hi, teeth, height } => {
                if !finite(&[*lo, *hi, *height]) || lo >= hi || *teeth == 0 {
                    return arg_err("comb needs finite lo < hi and at least one tooth");
                }
                Ok(())
            }
            Shape::Tent {
                center,
                half_width,
                height,
            } => {
                if !finite(&[*center, *half_width, *height]) || *half_width <= 0.0 {
                    return arg_err("tent needs a positive half width");
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::Indicator { lo, hi, height } => {
                if *lo <= z && z < *hi {
                    *height
                } else {
                    0.0
                }
            }
            Shape::PiecewiseConstant { breaks, values } => {
                if z < breaks[0] || z >= breaks[breaks.len() - 1] {
                    return 0.0;
                }
                let k = breaks.partition_point(|&b| b <= z) - 1;
                values[k]
            }
            Shape::Comb { lo, hi, teeth, height } => {
                if z < *lo || z >= *hi {
                    return 0.0;
                }
                let k = (((z - lo) / (hi - lo)) * *teeth as f64).floor() as usize;
                if k.min(teeth - 1).is_multiple_of(2) {
                    *height
                } else {
                    -height
                }
            }
            Shape::Tent {
                center,
                half_width,
                height,
            } => height * (1.0 - (z - center).abs() / half_width).max(0.0),
        }
    }

    /// Points where the shape or its slope may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Shape::Zero => Vec::new(),
            Shape::Indicator { lo, hi, .. } => vec![*lo, *hi],
            Shape::PiecewiseConstant { breaks, .. } => breaks.clone(),
            Shape::Comb { lo, hi, teeth, .. } => (0..=*teeth).map(|k| lo + (hi - lo) * k as f64 / *teeth as f64).collect(),
            Shape::Tent {
                center, half_width, ..
            } => vec![center - half_width, *center, center + half_width],
        }
    }

    /// Closed support interval, `None` for the zero shape.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Shape::Zero => None,
            Shape::Indicator { lo, hi, .. } | Shape::Comb { lo, hi, .. } => Some((*lo, *hi)),
            Shape::PiecewiseConstant { breaks, .. } => Some((breaks[0], breaks[breaks.len() - 1])),
            Shape::Tent {
                center, half_width, ..
            } => Some((center - half_width, center + half_width)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDef {
    shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<f64>,
}

/// A bounded, integrable drift component with its norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComponentDef", into = "ComponentDef")]
pub struct DriftComponent {
    shape: Shape,
    /// Truncation to `[-d, d]`, if any.
    window: Option<f64>,
    sup_norm: f64,
    l1_norm: f64,
    support: Option<(f64, f64)>,
}

impl TryFrom<ComponentDef> for DriftComponent {
    type Error = crate::SddeError;
    fn try_from(def: ComponentDef) -> Result<Self> {
        Self::with_window(def.shape, def.window)
    }
}

impl From<DriftComponent> for ComponentDef {
    fn from(c: DriftComponent) -> Self {
        ComponentDef {
            shape: c.shape,
            window: c.window,
        }
    }
}

impl DriftComponent {
    pub fn new(shape: Shape) -> Result<Self> {
        Self::with_window(shape, None)
    }

    pub fn zero() -> Self {
        Self {
            shape: Shape::Zero,
            window: None,
            sup_norm: 0.0,
            l1_norm: 0.0,
            support: None,
        }
    }

    /// `height · 1_{[0, l1/|height|)}`, a step with prescribed L¹ norm.
    pub fn step_with_l1(l1: f64, height: f64) -> Result<Self> {
        if !(l1 > 0.0) || height == 0.0 {
            return arg_err("step needs positive L1 norm and nonzero height");
        }
        Self::new(Shape::Indicator {
            lo: 0.0,
            hi: l1 / height.abs(),
            height,
        })
    }

    pub fn with_window(shape: Shape, window: Option<f64>) -> Result<Self> {
        shape.validate()?;
        if let Some(d) = window {
            if !(d > 0.0 && d.is_finite()) {
                return arg_err(format!("truncation window must be positive, got {d}"));
            }
        }
        let support = match (shape.support(), window) {
            (None, _) => None,
            (Some(s), None) => Some(s),
            (Some((lo, hi)), Some(d)) => {
                let (lo, hi) = (lo.max(-d), hi.min(d));
                (lo < hi).then_some((lo, hi))
            }
        };
        let mut c = Self {
            shape,
            window,
            sup_norm: 0.0,
            l1_norm: 0.0,
            support,
        };
        if let Some((lo, hi)) = support {
            let pieces = c.pieces(lo, hi);
            let quad = TanhSinh::default();
            c.l1_norm = pieces.windows(2).map(|w| quad.integrate_fn(|z| c.value(z).abs(), w[0], w[1])).sum();
            // all shapes are piecewise linear: the sup is attained at piece ends
            c.sup_norm = pieces
                .windows(2)
                .flat_map(|w| {
                    let eps = 1e-12 * (w[1] - w[0]);
                    [w[0] + eps, 0.5 * (w[0] + w[1]), w[1] - eps]
                })
                .map(|z| c.value(z).abs())
                .fold(0.0, f64::max);
        }
        Ok(c)
    }

    /// Sorted breakpoints inside `[lo, hi]`, including both ends.
    fn pieces(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut cuts = vec![lo, hi];
        cuts.extend(self.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn window(&self) -> Option<f64> {
        self.window
    }

    pub fn value(&self, z: f64) -> f64 {
        match self.window {
            Some(d) if z.abs() > d => 0.0,
            _ => self.shape.eval(z),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.shape.breakpoints();
        if let Some(d) = self.window {
            b.extend([-d, d]);
        }
        b
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// Support interval after windowing, `None` if identically zero.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// Half-width of the smallest centred interval containing the support.
    pub fn support_radius(&self) -> f64 {
        self.support.map_or(0.0, |(lo, hi)| lo.abs().max(hi.abs()))
    }

    fn truncated(&self, d: f64) -> Result<Self> {
        let window = Some(self.window.map_or(d, |w| w.min(d)));
        Self::with_window(self.shape.clone(), window)
    }
}

/// Anything that can be evaluated as `Σ_i b_i(z_i + shift_i)`.
pub trait Drift: Sync {
    fn dim(&self) -> usize;
    /// Value of the zero-based component `i` at `z`.
    fn component_value(&self, i: usize, z: f64) -> f64;
    fn component_sup(&self, i: usize) -> f64;

    fn sup_norm_sum(&self) -> f64 {
        (0..self.dim()).map(|i| self.component_sup(i)).sum()
    }
}

/// `Σ_{i ≤ d} b_i(z_i + shift_i)`.
pub fn eval_drift<D: Drift + ?Sized>(drift: &D, z: &[f64], shift: &[f64]) -> Result<f64> {
    if z.len() != shift.len() {
        return dim_err(format!("{} coefficients but {} shifts", z.len(), shift.len()));
    }
    if z.len() != drift.dim() {
        return dim_err(format!("drift has {} components, got {} coefficients", drift.dim(), z.len()));
    }
    Ok(z.iter().zip(shift).enumerate().map(|(i, (a, s))| drift.component_value(i, a + s)).sum())
}

/// Finite list of drift components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DriftSpec {
    components: Vec<DriftComponent>,
}

impl DriftSpec {
    pub fn new(components: Vec<DriftComponent>) -> Result<Self> {
        if components.is_empty() {
            return arg_err("drift needs at least one component");
        }
        Ok(Self { components })
    }

    /// The zero drift in dimension `d`.
    pub fn zero(d: usize) -> Self {
        Self {
            components: vec![DriftComponent::zero(); d.max(1)],
        }
    }

    pub fn components(&self) -> &[DriftComponent] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &DriftComponent {
        &self.components[i]
    }

    pub fn l1_norms(&self) -> Vec<f64> {
        self.components.iter().map(DriftComponent::l1_norm).collect()
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.components.iter().map(DriftComponent::sup_norm).collect()
    }

    pub fn sup_norm_sq_sum(&self) -> f64 {
        self.components.iter().map(|c| c.sup_norm().powi(2)).sum()
    }

    /// Appends zero components up to dimension `d`.
    pub fn padded(&self, d: usize) -> Self {
        let mut components = self.components.clone();
        components.resize(d.max(components.len()), DriftComponent::zero());
        Self { components }
    }
}

impl Drift for DriftSpec {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn component_value(&self, i: usize, z: f64) -> f64 {
        self.components[i].value(z)
    }

    fn component_sup(&self, i: usize) -> f64 {
        self.components[i].sup_norm()
    }
}

/// `b^d`: keeps the first `d` components and restricts each to `[-d, d]`.
pub fn truncate_dimension(spec: &DriftSpec, d: usize) -> Result<DriftSpec> {
    if d == 0 {
        return arg_err("truncation dimension must be at least 1");
    }
    let components = spec
        .components
        .iter()
        .take(d)
        .map(|c| c.truncated(d as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftSpec { components })
}

fn bump_raw(v: f64) -> f64 {
    let s = (1.0 - v) * (1.0 + v);
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn bump_norm() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| TanhSinh::with_tolerance(1e-15).integrate(|_, da, db| {
        let s = da * db;
        if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() }
    }, -1.0, 1.0))
}

/// Standard bump `φ(v) ∝ exp(-1/(1 - v²))` on `(-1, 1)` with unit mass.
pub fn bump(v: f64) -> f64 {
    bump_raw(v) / bump_norm()
}

/// `φ'(v) = φ(v) · (-2v / (1 - v²)²)`.
pub fn bump_derivative(v: f64) -> f64 {
    let s = (1.0 - v) * (1.0 + v);
    if s <= 0.0 {
        return 0.0;
    }
    bump(v) * (-2.0 * v / (s * s))
}

/// `b_i * φ_n` and its derivative on a uniform table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifiedComponent {
    level: usize,
    lo: f64,
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
    clamp: f64,
    lipschitz: f64,
    sup_norm: f64,
    l1_norm: f64,
}

impl MollifiedComponent {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Locates `z` in the table: `(cell, s in [0,1])`.
    fn locate(&self, z: f64) -> Option<(usize, f64)> {
        if self.values.is_empty() {
            return None;
        }
        let pos = (z - self.lo) / self.step;
        let last = self.values.len() - 1;
        if !(pos >= 0.0 && pos <= last as f64) {
            return None;
        }
        let cell = (pos.floor() as usize).min(last - 1);
        Some((cell, pos - cell as f64))
    }

    pub fn value(&self, z: f64) -> f64 {
        let Some((c, s)) = self.locate(z) else { return 0.0 };
        let (y0, y1) = (self.values[c], self.values[c + 1]);
        let (m0, m1) = (self.derivs[c] * self.step, self.derivs[c + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        v.clamp(-self.clamp, self.clamp)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let Some((c, s)) = self.locate(z) else { return 0.0 };
        let (y0, y1) = (self.values[c], self.values[c + 1]);
        let (m0, m1) = (self.derivs[c] * self.step, self.derivs[c + 1] * self.step);
        let s2 = s * s;
        let dv = (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1;
        dv / self.step
    }

    /// Largest `|b'_{i,n}|` on the table.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn table(&self) -> (Vec<f64>, &[f64], &[f64]) {
        let nodes = (0..self.values.len()).map(|k| self.lo + k as f64 * self.step).collect();
        (nodes, &self.values, &self.derivs)
    }
}

/// Convolution `∫_{-1}^{1} b(z - v/n) k(v) dv`, split where `b` jumps.
fn convolve<K: Fn(f64) -> f64>(c: &DriftComponent, n: f64, z: f64, kernel: K, breaks: &[f64], quad: &TanhSinh) -> f64 {
    let cuts: Vec<f64> = breaks.iter().map(|b| n * (z - b)).collect();
    quad.integrate_pieces(|v| c.value(z - v / n) * kernel(v), -1.0, 1.0, &cuts)
}

/// Exact max of `|p'|` for the piecewise cubic Hermite interpolant: on each
/// cell `p'` is a quadratic, so it peaks at an end or at its vertex.
fn hermite_slope_max(values: &[f64], derivs: &[f64], step: f64) -> f64 {
    let mut best = derivs.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    for c in 0..values.len().saturating_sub(1) {
        let (y0, y1) = (values[c], values[c + 1]);
        let (m0, m1) = (derivs[c] * step, derivs[c + 1] * step);
        // p'(s)·step = a s² + b s + m0
        let a = 6.0 * (y0 - y1) + 3.0 * (m0 + m1);
        let b = 6.0 * (y1 - y0) - 4.0 * m0 - 2.0 * m1;
        if a != 0.0 {
            let s = -b / (2.0 * a);
            if s > 0.0 && s < 1.0 {
                best = best.max(((a * s + b) * s + m0).abs() / step);
            }
        }
    }
    best
}

/// `b * φ_n` tabulated on `TABLE_POINTS` nodes over the support widened by `1/n`.
pub fn mollify(component: &DriftComponent, n: usize) -> Result<MollifiedComponent> {
    if n == 0 {
        return arg_err("mollification level must be at least 1");
    }
    let empty = MollifiedComponent {
        level: n,
        lo: 0.0,
        step: 1.0,
        values: Vec::new(),
        derivs: Vec::new(),
        clamp: 0.0,
        lipschitz: 0.0,
        sup_norm: 0.0,
        l1_norm: 0.0,
    };
    let Some((lo, hi)) = component.support() else { return Ok(empty) };
    if component.sup_norm() == 0.0 {
        return Ok(empty);
    }
    let nf = n as f64;
    let (lo, hi) = (lo - 1.0 / nf, hi + 1.0 / nf);
    let step = (hi - lo) / (TABLE_POINTS - 1) as f64;
    let breaks = component.breakpoints();
    let quad = TanhSinh::with_tolerance(1e-11);

    let mut values = Vec::with_capacity(TABLE_POINTS);
    let mut derivs = Vec::with_capacity(TABLE_POINTS);
    for k in 0..TABLE_POINTS {
        if k == 0 || k == TABLE_POINTS - 1 {
            values.push(0.0);
            derivs.push(0.0);
            continue;
        }
        let z = lo + k as f64 * step;
        values.push(convolve(component, nf, z, bump, &breaks, &quad));
        derivs.push(convolve(component, nf, z, |v| nf * bump_derivative(v), &breaks, &quad));
    }
    let clamp = component.sup_norm();
    for v in values.iter_mut() {
        *v = v.clamp(-clamp, clamp);
    }
    let lipschitz = hermite_slope_max(&values, &derivs, step);
    let sup_norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let l1_norm = step * (values.iter().map(|v| v.abs()).sum::<f64>());
    Ok(MollifiedComponent {
        level: n,
        lo,
        step,
        values,
        derivs,
        clamp,
        lipschitz,
        sup_norm,
        l1_norm,
    })
}

/// Lipschitz constant of a mollified component.
pub fn lipschitz_estimate(component: &MollifiedComponent) -> f64 {
    component.lipschitz()
}

/// All components of a drift mollified at level `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifiedDrift {
    base: DriftSpec,
    level: usize,
    components: Vec<MollifiedComponent>,
}

impl MollifiedDrift {
    pub fn new(base: &DriftSpec, n: usize) -> Result<Self> {
        let components = base.components().iter().map(|c| mollify(c, n)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base: base.clone(),
            level: n,
            components,
        })
    }

    pub fn base(&self) -> &DriftSpec {
        &self.base
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn component(&self, i: usize) -> &MollifiedComponent {
        &self.components[i]
    }

    pub fn derivative(&self, i: usize, z: f64) -> f64 {
        self.components[i].derivative(z)
    }

    pub fn lipschitz_sum(&self) -> f64 {
        self.components.iter().map(MollifiedComponent::lipschitz).sum()
    }
}

impl Drift for MollifiedDrift {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn component_value(&self, i: usize, z: f64) -> f64 {
        self.components[i].value(z)
    }

    /// The base norm: tabulated values are clamped to it.
    fn component_sup(&self, i: usize) -> f64 {
        self.base.component(i).sup_norm()
    }
}
