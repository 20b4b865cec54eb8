//! Driving noise: Brownian motion `W`, independent fractional Brownian motions
//! `B^{H_n}` and the truncated perturbation `𝔹(t) = Σ_n w_n B^{H_n}(t) e_n`.
//!
//! fBm paths are sampled exactly from the Cholesky factor of the grid
//! covariance. Factors are computed once per `(H, grid)` and shared.
//!
//! Every random draw is derived from a master seed. Path `p` and component `c`
//! (0 for `W`, `n` for `B^{H_n}`) use ChaCha stream `p·1024 + c`, so the same
//! path index always sees the same noise regardless of thread scheduling or of
//! which other quantities are being computed.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, dim_err, Result, SddeError};
use crate::segment::grid_index;

/// Largest grid accepted by the exact sampler.
pub const MAX_FBM_GRID: usize = 4096;

/// Number of RNG streams reserved per path (one per noise component).
pub const STREAMS_PER_PATH: u64 = 1024;

/// Uniform grid `t_k = k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0 && dt > 0.0 && horizon.is_finite()) {
            return arg_err(format!("grid needs positive horizon and step, got T={horizon}, dt={dt}"));
        }
        match grid_index(horizon, dt) {
            Some(m) if m >= 1 => Ok(Self { dt, steps: m }),
            _ => arg_err(format!("horizon {horizon} is not a multiple of the step {dt}")),
        }
    }

    pub fn from_steps(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || steps == 0 {
            return arg_err("grid needs a positive step and at least one step");
        }
        Ok(Self { dt, steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Grid index of `t`, if `t` is a node.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        grid_index(t, self.dt).filter(|&k| k <= self.steps)
    }
}

/// Hurst parameters and ℓ¹ weights of the perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstWeightSpec {
    hurst: Vec<f64>,
    weights: Vec<f64>,
}

impl HurstWeightSpec {
    pub fn new(hurst: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if hurst.len() != weights.len() {
            return dim_err(format!("{} Hurst parameters but {} weights", hurst.len(), weights.len()));
        }
        if hurst.is_empty() {
            return arg_err("perturbation needs at least one component");
        }
        if let Some(h) = hurst.iter().find(|&&h| !(h > 0.0 && h < 0.5)) {
            return arg_err(format!("Hurst parameter {h} outside (0, 1/2)"));
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > 0.0 && w <= 1.0)) {
            return arg_err(format!("weight {w} outside (0, 1]"));
        }
        Ok(Self { hurst, weights })
    }

    pub fn len(&self) -> usize {
        self.hurst.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hurst.is_empty()
    }

    pub fn hurst(&self) -> &[f64] {
        &self.hurst
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_l1(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }
}

/// `E‖Σ_{n>keep} w_n B^{H_n}(t) e_n‖ ≤ (1 ∨ t) Σ_{n>keep} |w_n|`.
pub fn perturbation_tail_bound(weights: &[f64], keep: usize, t: f64) -> f64 {
    t.max(1.0) * weights.iter().skip(keep).map(|w| w.abs()).sum::<f64>()
}

/// RNG for `(path, component)` under a master seed.
pub fn stream_rng(seed: u64, path: u64, component: u64) -> ChaCha8Rng {
    debug_assert!(component < STREAMS_PER_PATH);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path.wrapping_mul(STREAMS_PER_PATH).wrapping_add(component));
    rng
}

/// Brownian path on `grid` with `W(0) = 0`.
pub fn sample_brownian<R: Rng + ?Sized>(grid: &TimeGrid, rng: &mut R) -> Vec<f64> {
    let sd = grid.dt().sqrt();
    let mut path = Vec::with_capacity(grid.steps() + 1);
    let mut w = 0.0;
    path.push(w);
    for _ in 0..grid.steps() {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        path.push(w);
    }
    path
}

/// fBm covariance `½(s^{2H} + t^{2H} - |t - s|^{2H})`.
pub fn fbm_covariance(h: f64, s: f64, t: f64) -> f64 {
    if h == 0.5 && s >= 0.0 && t >= 0.0 {
        return s.min(t);
    }
    let p = 2.0 * h;
    0.5 * (s.abs().powf(p) + t.abs().powf(p) - (t - s).abs().powf(p))
}

/// Packed lower Cholesky factor of the fBm covariance on `t_1, …, t_M`.
#[derive(Debug, Clone)]
pub struct FbmFactor {
    hurst: f64,
    grid: TimeGrid,
    /// Row `k` occupies `rows[k(k+1)/2 .. (k+1)(k+2)/2]`.
    rows: Vec<f64>,
    jitter: f64,
}

impl FbmFactor {
    pub fn new(hurst: f64, grid: &TimeGrid) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return arg_err(format!("Hurst parameter {hurst} outside (0, 1)"));
        }
        let m = grid.steps();
        if m > MAX_FBM_GRID {
            return arg_err(format!("exact fBm sampling is capped at {MAX_FBM_GRID} steps, got {m}"));
        }
        let times: Vec<f64> = (1..=m).map(|k| grid.time(k)).collect();
        let cov = DMatrix::from_fn(m, m, |i, j| fbm_covariance(hurst, times[i], times[j]));
        let max_diag = (0..m).map(|i| cov[(i, i)]).fold(0.0, f64::max);

        let mut jitter = 0.0;
        let mut factor = Cholesky::new(cov.clone());
        for scale in [1e-16, 1e-14, 1e-12, 1e-10] {
            if factor.is_some() {
                break;
            }
            jitter = scale * max_diag;
            let mut shifted = cov.clone();
            for i in 0..m {
                shifted[(i, i)] += jitter;
            }
            factor = Cholesky::new(shifted);
        }
        let l = factor
            .ok_or_else(|| SddeError::Numerical(format!("fBm covariance (H={hurst}, M={m}) not positive definite after jitter {jitter:e}")))?
            .unpack();

        let mut rows = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in 0..=i {
                rows.push(l[(i, j)]);
            }
        }
        Ok(Self {
            hurst,
            grid: *grid,
            rows,
            jitter,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Diagonal jitter that was needed for the factorisation (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.grid.steps();
        let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let mut path = Vec::with_capacity(m + 1);
        path.push(0.0);
        let mut start = 0;
        for i in 0..m {
            let row = &self.rows[start..start + i + 1];
            path.push(row.iter().zip(&z).map(|(a, b)| a * b).sum());
            start += i + 1;
        }
        path
    }
}

/// One exact fBm path on `grid`. Factorises on every call; use [`FbmFactor`]
/// when sampling many paths.
pub fn sample_fbm<R: Rng + ?Sized>(hurst: f64, grid: &TimeGrid, rng: &mut R) -> Result<Vec<f64>> {
    Ok(FbmFactor::new(hurst, grid)?.sample(rng))
}

/// Coefficient paths `t ↦ w_n B^{H_n}(t)`, drawn sequentially from `rng`.
pub fn sample_perturbation<R: Rng + ?Sized>(spec: &HurstWeightSpec, grid: &TimeGrid, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    spec.hurst()
        .iter()
        .zip(spec.weights())
        .map(|(&h, &w)| Ok(sample_fbm(h, grid, rng)?.into_iter().map(|b| w * b).collect()))
        .collect()
}

/// The Brownian driver together with the fBm family for one sample path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPathSet {
    grid: TimeGrid,
    w: Vec<f64>,
    /// Unweighted fBm paths, one per component.
    b: Vec<Vec<f64>>,
    weights: Vec<f64>,
    seed: u64,
    path_index: u64,
}

impl GaussianPathSet {
    pub fn new(grid: TimeGrid, w: Vec<f64>, b: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let len = grid.steps() + 1;
        if w.len() != len || b.iter().any(|p| p.len() != len) {
            return dim_err(format!("paths must have {len} samples"));
        }
        if b.len() != weights.len() {
            return dim_err("one weight per fBm component required");
        }
        if w[0] != 0.0 || b.iter().any(|p| p[0] != 0.0) {
            return arg_err("driving paths must start at 0");
        }
        Ok(Self {
            grid,
            w,
            b,
            weights,
            seed: 0,
            path_index: 0,
        })
    }

    /// All drivers identically zero (deterministic runs).
    pub fn zero(grid: TimeGrid, components: usize) -> Self {
        let len = grid.steps() + 1;
        Self {
            grid,
            w: vec![0.0; len],
            b: vec![vec![0.0; len]; components],
            weights: vec![1.0; components],
            seed: 0,
            path_index: 0,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self, n: usize) -> &[f64] {
        &self.b[n]
    }

    pub fn components(&self) -> usize {
        self.b.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// `w_n B^{H_n}(t_k)` (zero-based `n`).
    pub fn perturbation(&self, n: usize, k: usize) -> f64 {
        self.weights[n] * self.b[n][k]
    }

    /// Replace the Brownian path, keeping the fBm family.
    pub fn with_w(&self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.w.len() || w[0] != 0.0 {
            return arg_err("replacement Brownian path has the wrong length or does not start at 0");
        }
        Ok(Self { w, ..self.clone() })
    }
}

/// Grid, perturbation spec and shared fBm factors; samples reproducible
/// [`GaussianPathSet`]s by path index.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    grid: TimeGrid,
    spec: HurstWeightSpec,
    factors: Vec<Arc<FbmFactor>>,
}

impl NoiseModel {
    pub fn new(grid: TimeGrid, spec: HurstWeightSpec) -> Result<Self> {
        if spec.len() as u64 >= STREAMS_PER_PATH {
            return arg_err(format!("at most {} fBm components", STREAMS_PER_PATH - 1));
        }
        let mut factors: Vec<Arc<FbmFactor>> = Vec::with_capacity(spec.len());
        for &h in spec.hurst() {
            let shared = factors.iter().find(|f| f.hurst() == h).cloned();
            factors.push(match shared {
                Some(f) => f,
                None => Arc::new(FbmFactor::new(h, &grid)?),
            });
        }
        Ok(Self { grid, spec, factors })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn spec(&self) -> &HurstWeightSpec {
        &self.spec
    }

    /// Largest jitter used by any factorisation.
    pub fn max_jitter(&self) -> f64 {
        self.factors.iter().map(|f| f.jitter()).fold(0.0, f64::max)
    }

    pub fn sample(&self, seed: u64, path_index: u64) -> GaussianPathSet {
        let w = sample_brownian(&self.grid, &mut stream_rng(seed, path_index, 0));
        let b = self
            .factors
            .iter()
            .enumerate()
            .map(|(n, f)| f.sample(&mut stream_rng(seed, path_index, n as u64 + 1)))
            .collect();
        GaussianPathSet {
            grid: self.grid,
            w,
            b,
            weights: self.spec.weights().to_vec(),
            seed,
            path_index,
        }
    }
}

/// Local non-determinism constant estimated on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlnEstimate {
    pub hurst: f64,
    pub m: usize,
    pub c_hat: f64,
}

/// `Cov(B(b) - B(a), B(d) - B(c))`.
fn increment_covariance(h: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    if h == 0.5 {
        // exact overlap length, avoids cancellation
        return (b.min(d) - a.max(c)).max(0.0);
    }
    let p = 2.0 * h;
    0.5 * ((d - a).abs().powf(p) + (c - b).abs().powf(p) - (d - b).abs().powf(p) - (c - a).abs().powf(p))
}

/// Smallest generalised eigenvalue of `(Σ, D)` where `Σ` is the increment
/// covariance on `times` (which starts at the first left endpoint) and
/// `D = diag(|Δt_l|^{2H})`.
pub fn estimate_sln_constant_on(hurst: f64, times: &[f64]) -> Result<SlnEstimate> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return arg_err(format!("Hurst parameter {hurst} outside (0, 1)"));
    }
    if times.len() < 3 {
        return arg_err("need at least two increments");
    }
    let m = times.len() - 1;
    let p = 2.0 * hurst;
    let mut scale = Vec::with_capacity(m);
    for l in 0..m {
        let dt = times[l + 1] - times[l];
        if !(dt > 0.0) {
            return arg_err("times must be strictly increasing");
        }
        scale.push(dt.powf(p).sqrt());
    }
    let mut a = DMatrix::zeros(m, m);
    let mut diagonal = true;
    for i in 0..m {
        a[(i, i)] = 1.0;
        for j in 0..i {
            let c = increment_covariance(hurst, times[i], times[i + 1], times[j], times[j + 1]) / (scale[i] * scale[j]);
            a[(i, j)] = c;
            a[(j, i)] = c;
            diagonal &= c == 0.0;
        }
    }
    let c_hat = if diagonal {
        1.0
    } else {
        SymmetricEigen::new(a).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    };
    if !(c_hat > 0.0) {
        return Err(SddeError::Numerical(format!("non-positive non-determinism constant {c_hat:e}")));
    }
    Ok(SlnEstimate {
        hurst,
        m,
        c_hat: c_hat.min(1.0),
    })
}

/// [`estimate_sln_constant_on`] for `m` equal increments on `[0, span]`.
pub fn estimate_sln_constant(hurst: f64, m: usize, span: f64) -> Result<SlnEstimate> {
    if m < 2 {
        return arg_err("need at least two increments");
    }
    if !(span > 0.0) {
        return arg_err("span must be positive");
    }
    let times: Vec<f64> = (0..=m).map(|l| span * l as f64 / m as f64).collect();
    estimate_sln_constant_on(hurst, &times)
}
