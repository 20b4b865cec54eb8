use serde::Serialize;

use super::config::{ExperimentConfig, Resolved};
use crate::drift::{truncate_dimension, Drift, DriftSpec, MollifiedDrift};
use crate::error::{arg_err, Result, SddeError};
use crate::kernels::{check_assumptions, default_beta, malliavin_bounds, AssumptionReport, BoundReport, Regime};
use crate::solver::{mc_ensemble, EnsembleOptions, EnsembleResult, LevelSummary, PairDistance, SeededNoise};

/// One point of the `(dimension, level)` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatticePoint {
    pub dim: usize,
    pub level: usize,
}

/// `b^d` mollified at level `n` for every `d` in `dims` and `n` in `levels`,
/// dimension-major.
pub fn build_lattice(drift: &DriftSpec, levels: &[usize], dims: &[usize]) -> Result<(Vec<LatticePoint>, Vec<MollifiedDrift>)> {
    let mut points = Vec::new();
    let mut drifts = Vec::new();
    for &d in dims {
        let truncated = truncate_dimension(&drift.padded(d), d)?;
        for &n in levels {
            points.push(LatticePoint { dim: d, level: n });
            drifts.push(MollifiedDrift::new(&truncated, n)?);
        }
    }
    Ok((points, drifts))
}

fn ensemble(cfg: &ExperimentConfig, res: &Resolved, drifts: &[MollifiedDrift], theta_cells: usize, beta: f64, retain: usize) -> Result<EnsembleResult> {
    let source = SeededNoise {
        model: res.noise.clone(),
        seed: cfg.seed,
    };
    let opts = EnsembleOptions {
        paths: cfg.paths,
        t_index: None,
        theta_cells,
        beta,
        retain,
    };
    mc_ensemble(drifts, &source, &res.solver, &opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub assumptions: AssumptionReport,
    pub sln: Vec<f64>,
    /// Bounds at `(θ, θ', t) = (0, T/2, T)` when admissible.
    pub bounds: Option<BoundReport>,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.assumptions.pass()
    }
}

pub fn run_check(cfg: &ExperimentConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let input = cfg.assumption_input()?;
    let assumptions = check_assumptions(&input, Regime::Finite)?;
    let drift = cfg.drift_spec(&input.sln)?;
    let bounds = if assumptions.pass() {
        let t = input.horizon;
        Some(malliavin_bounds(&input, t, 0.0, 0.5 * t, drift.sup_norm_sum(), None)?)
    } else {
        None
    };
    Ok(CheckReport {
        assumptions,
        sln: input.sln,
        bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub paths: usize,
    pub t: f64,
    pub lattice: Vec<LatticePoint>,
    pub levels: Vec<LevelSummary>,
    #[serde(skip)]
    pub ensemble: EnsembleResult,
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateReport> {
    let res = cfg.resolve()?;
    let (lattice, drifts) = build_lattice(&res.drift, &cfg.levels, &cfg.dims)?;
    let ens = ensemble(cfg, &res, &drifts, 0, 0.45, cfg.retain.min(cfg.paths))?;
    Ok(SimulateReport {
        paths: ens.paths,
        t: ens.t,
        lattice,
        levels: ens.levels.clone(),
        ensemble: ens,
    })
}

/// Consecutive distances along one lattice axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCheck {
    /// `"level"` (dimension fixed) or `"dim"` (level fixed).
    pub axis: String,
    pub fixed: usize,
    pub steps: Vec<(usize, usize)>,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
    /// Each distance exceeds its predecessor by at most one combined SE.
    pub nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeReport {
    pub paths: usize,
    pub t: f64,
    pub lattice: Vec<LatticePoint>,
    pub distances: Vec<PairDistance>,
    pub monotone: Vec<MonotoneCheck>,
    #[serde(skip)]
    pub ensemble: EnsembleResult,
}

impl ConvergeReport {
    pub fn pass(&self) -> bool {
        self.monotone.iter().all(|m| m.nonincreasing)
    }
}

fn monotone_along(axis: &str, fixed: usize, chain: &[usize], dists: &[&PairDistance], key: impl Fn(&PairDistance) -> (usize, usize)) -> Option<MonotoneCheck> {
    if chain.len() < 3 {
        return None;
    }
    let mut steps = Vec::new();
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for w in chain.windows(2) {
        let d = dists.iter().find(|d| key(d) == (w[0], w[1]))?;
        steps.push((w[0], w[1]));
        means.push(d.estimate.mean);
        ses.push(d.estimate.se);
    }
    let nonincreasing = (1..means.len()).all(|k| means[k] <= means[k - 1] + ses[k].hypot(ses[k - 1]));
    Some(MonotoneCheck {
        axis: axis.to_string(),
        fixed,
        steps,
        means,
        ses,
        nonincreasing,
    })
}

pub fn run_converge(cfg: &ExperimentConfig) -> Result<ConvergeReport> {
    if cfg.levels.len() < 2 && cfg.dims.len() < 2 {
        return arg_err("a convergence study needs at least two mollification levels or two dimensions");
    }
    let res = cfg.resolve()?;
    let (lattice, drifts) = build_lattice(&res.drift, &cfg.levels, &cfg.dims)?;
    let ens = ensemble(cfg, &res, &drifts, 0, 0.45, cfg.retain.min(cfg.paths))?;

    let mut monotone = Vec::new();
    for &d in &cfg.dims {
        let dists: Vec<&PairDistance> = ens.distances.iter().filter(|p| p.dim_a == d && p.dim_b == d).collect();
        monotone.extend(monotone_along("level", d, &cfg.levels, &dists, |p| (p.level_a, p.level_b)));
    }
    for &n in &cfg.levels {
        let dists: Vec<&PairDistance> = ens.distances.iter().filter(|p| p.level_a == n && p.level_b == n).collect();
        monotone.extend(monotone_along("dim", n, &cfg.dims, &dists, |p| (p.dim_a, p.dim_b)));
    }
    Ok(ConvergeReport {
        paths: ens.paths,
        t: ens.t,
        lattice,
        distances: ens.distances.clone(),
        monotone,
        ensemble: ens,
    })
}

/// One empirical quantity next to its theoretical bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeComparison {
    pub level: usize,
    pub dim: usize,
    pub kind: String,
    pub theta: f64,
    pub theta_p: f64,
    pub empirical: f64,
    pub se: f64,
    pub bound: f64,
    pub pass: bool,
}

impl ProbeComparison {
    fn new(point: LatticePoint, kind: &str, theta: f64, theta_p: f64, empirical: f64, se: f64, bound: f64) -> Self {
        Self {
            level: point.level,
            dim: point.dim,
            kind: kind.to_string(),
            theta,
            theta_p,
            empirical,
            se,
            bound,
            pass: empirical <= bound + 3.0 * se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalliavinReport {
    pub paths: usize,
    pub t: f64,
    pub beta: f64,
    /// `M = Σ ‖b_i‖_∞`.
    pub m_sup: f64,
    pub assumptions: AssumptionReport,
    pub probes: Vec<ProbeComparison>,
    /// `Ê ∫_0^t |D_θ x(t)|² dθ` per lattice point.
    pub sq_integrals: Vec<(LatticePoint, f64, f64)>,
    pub gronwall_ok: bool,
    pub violations: usize,
}

impl MalliavinReport {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.gronwall_ok
    }
}

/// Monte Carlo Malliavin quantities against the explicit bounds. Refuses
/// configurations that fail the standing assumptions.
pub fn run_malliavin(cfg: &ExperimentConfig) -> Result<MalliavinReport> {
    let input = cfg.assumption_input()?;
    let assumptions = check_assumptions(&input, Regime::Finite)?;
    if !assumptions.pass() {
        return Err(SddeError::Inadmissible(assumptions.failures.join("; ")));
    }
    if cfg.malliavin.theta_cells == 0 {
        return arg_err("malliavin mode needs at least one θ cell");
    }
    let res = cfg.resolve()?;
    let beta = cfg.malliavin.beta.unwrap_or_else(|| default_beta(input.delta_h));
    let (lattice, drifts) = build_lattice(&res.drift, &cfg.levels, &cfg.dims)?;
    let ens = ensemble(cfg, &res, &drifts, cfg.malliavin.theta_cells, beta, 0)?;
    let t = ens.t;

    let mut probes = Vec::new();
    let mut sq_integrals = Vec::new();
    let mut gronwall_ok = true;
    for ((point, drift), lm) in lattice.iter().zip(&drifts).zip(&ens.malliavin) {
        let m_sup = drift.sup_norm_sum();
        gronwall_ok &= lm.gronwall_ok;
        for (theta, est) in lm.thetas.iter().zip(&lm.pointwise_minus_one) {
            let b = malliavin_bounds(&input, t, *theta, *theta, m_sup, Some(beta))?;
            probes.push(ProbeComparison::new(*point, "pointwise", *theta, *theta, est.mean, est.se, b.pointwise));
        }
        for pair in &lm.differences {
            let (th, thp) = (lm.thetas[pair.i], lm.thetas[pair.j]);
            let b = malliavin_bounds(&input, t, th, thp, m_sup, Some(beta))?;
            probes.push(ProbeComparison::new(*point, "difference", th, thp, pair.estimate.mean, pair.estimate.se, b.difference));
        }
        let b = malliavin_bounds(&input, t, 0.0, 0.0, m_sup, Some(beta))?;
        let e = &lm.minus_one_integral;
        probes.push(ProbeComparison::new(*point, "integrated", 0.0, t, e.mean, e.se, b.integrated_pointwise));
        probes.push(ProbeComparison::new(*point, "holder", 0.0, t, lm.holder.mean, lm.holder.se, b.holder));
        sq_integrals.push((*point, lm.sq_integral.mean, lm.sq_integral.se));
    }
    let violations = probes.iter().filter(|p| !p.pass).count();
    Ok(MalliavinReport {
        paths: ens.paths,
        t,
        beta,
        m_sup: res.drift.sup_norm_sum(),
        assumptions,
        probes,
        sq_integrals,
        gronwall_ok,
        violations,
    })
}
