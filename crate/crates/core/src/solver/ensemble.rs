use rayon::prelude::*;
use serde::Serialize;

use super::{euler_solve, first_variation, SolverConfig};
use crate::drift::{Drift, MollifiedDrift};
use crate::error::{arg_err, Result};
use crate::noise::{GaussianPathSet, NoiseModel};
use crate::stats::{Accumulator, Estimate};

/// Paths processed per parallel batch; bounds memory for large ensembles.
const BATCH: usize = 2048;

/// Supplies the driving noise for path `index`.
pub trait PathSource: Sync {
    /// Number of available paths, `None` when unbounded.
    fn available(&self) -> Option<usize>;
    fn path(&self, index: usize) -> GaussianPathSet;
}

impl PathSource for [GaussianPathSet] {
    fn available(&self) -> Option<usize> {
        Some(self.len())
    }

    fn path(&self, index: usize) -> GaussianPathSet {
        self[index].clone()
    }
}

impl PathSource for Vec<GaussianPathSet> {
    fn available(&self) -> Option<usize> {
        Some(self.len())
    }

    fn path(&self, index: usize) -> GaussianPathSet {
        self[index].clone()
    }
}

/// A noise model under a fixed master seed.
#[derive(Debug, Clone)]
pub struct SeededNoise {
    pub model: NoiseModel,
    pub seed: u64,
}

impl PathSource for SeededNoise {
    fn available(&self) -> Option<usize> {
        None
    }

    fn path(&self, index: usize) -> GaussianPathSet {
        self.model.sample(self.seed, index as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleOptions {
    pub paths: usize,
    /// Evaluation step; `None` means the horizon.
    pub t_index: Option<usize>,
    /// Number of θ cells on `[0, t]` for first-variation probes; 0 disables
    /// them. The probe nodes include both ends, so at most 31 cells.
    pub theta_cells: usize,
    pub beta: f64,
    /// Trajectories kept for the first `retain` paths.
    pub retain: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            paths: 1000,
            t_index: None,
            theta_cells: 0,
            beta: 0.45,
            retain: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub dim: usize,
    pub terminal: Estimate,
    /// Mean of `dP̄/dP = exp(-Σ b ΔW - ½ Σ b² Δt)`.
    pub rn_weight: Estimate,
    pub min_envelope_slack: f64,
    pub gronwall_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDistance {
    pub a: usize,
    pub b: usize,
    pub level_a: usize,
    pub level_b: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    /// `Ê|x^a(t) - x^b(t)|²`.
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaPair {
    pub i: usize,
    pub j: usize,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMalliavin {
    pub level: usize,
    pub dim: usize,
    pub t: f64,
    pub beta: f64,
    pub thetas: Vec<f64>,
    /// `Ê|D_θ x(t) - 1|²` per probe.
    pub pointwise_minus_one: Vec<Estimate>,
    /// `Ê|D_θ x(t) - D_θ' x(t)|²` for probe pairs `i < j`.
    pub differences: Vec<ThetaPair>,
    /// `Ê ∫_0^t |D_θ x(t)|² dθ`.
    pub sq_integral: Estimate,
    /// `Ê ∫_0^t |D_θ x(t) - 1|² dθ`.
    pub minus_one_integral: Estimate,
    /// `Ê ∫∫ |D_θ x(t) - D_θ' x(t)|² / |θ - θ'|^{1+2β}` off the diagonal.
    pub holder: Estimate,
    pub gronwall_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetainedPath {
    pub path: usize,
    pub level: usize,
    pub dim: usize,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub paths: usize,
    pub t: f64,
    pub levels: Vec<LevelSummary>,
    pub distances: Vec<PairDistance>,
    pub malliavin: Vec<LevelMalliavin>,
    pub trajectories: Vec<RetainedPath>,
}

impl EnsembleResult {
    /// Distances between consecutive levels, in level order.
    pub fn successive(&self) -> Vec<&PairDistance> {
        self.distances.iter().filter(|d| d.b == d.a + 1).collect()
    }
}

struct PathOutput {
    terminal: Vec<f64>,
    log_weight: Vec<f64>,
    slack: Vec<f64>,
    d_values: Vec<Vec<f64>>,
    gronwall: Vec<bool>,
    retained: Vec<Vec<f64>>,
}

/// Theta probe steps `0 = q_0 < … < q_P = kt`, close to equispaced.
fn theta_steps(kt: usize, cells: usize) -> Vec<usize> {
    let cells = cells.min(kt).max(1);
    let mut q: Vec<usize> = (0..=cells).map(|j| ((j * kt) as f64 / cells as f64).round() as usize).collect();
    q.dedup();
    q
}

fn trapezoid_on(nodes: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    for j in 0..nodes.len().saturating_sub(1) {
        let h = nodes[j + 1] - nodes[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    w
}

/// Coupled Monte Carlo over several drift levels: every level sees the same
/// driving noise for a given path index.
pub fn mc_ensemble<S: PathSource + ?Sized>(levels: &[MollifiedDrift], source: &S, config: &SolverConfig, opts: &EnsembleOptions) -> Result<EnsembleResult> {
    if levels.is_empty() {
        return arg_err("ensemble needs at least one drift level");
    }
    if opts.paths == 0 {
        return arg_err("ensemble needs at least one path");
    }
    if let Some(n) = source.available() {
        if n < opts.paths {
            return arg_err(format!("{} paths requested but only {n} supplied", opts.paths));
        }
    }
    if opts.theta_cells > 31 {
        return arg_err("at most 31 θ cells (32 probe nodes)");
    }
    if !(opts.beta > 0.0 && opts.beta < 0.5) {
        return arg_err(format!("β must lie in (0, 1/2), got {}", opts.beta));
    }
    let kt = opts.t_index.unwrap_or(config.steps());
    if kt > config.steps() {
        return arg_err("evaluation time beyond the horizon");
    }
    let configs: Vec<SolverConfig> = levels.iter().map(|l| config.with_dim(l.dim().max(1))).collect::<Result<_>>()?;
    let dt = config.dt();
    let t = kt as f64 * dt;
    let probes = if opts.theta_cells > 0 { theta_steps(kt, opts.theta_cells) } else { Vec::new() };
    let thetas: Vec<f64> = probes.iter().map(|&q| q as f64 * dt).collect();

    let run_path = |index: usize| -> Result<PathOutput> {
        let paths = source.path(index);
        let mut out = PathOutput {
            terminal: Vec::with_capacity(levels.len()),
            log_weight: Vec::with_capacity(levels.len()),
            slack: Vec::with_capacity(levels.len()),
            d_values: Vec::with_capacity(levels.len()),
            gronwall: Vec::with_capacity(levels.len()),
            retained: Vec::new(),
        };
        for (drift, cfg) in levels.iter().zip(&configs) {
            let traj = euler_solve(drift, &paths, cfg)?;
            out.terminal.push(traj.x()[kt]);
            let (mut stoch, mut quad) = (0.0, 0.0);
            for (b, dw) in traj.drift_trace().iter().zip(traj.increments()).take(kt) {
                stoch += b * dw;
                quad += b * b * dt;
            }
            out.log_weight.push(-stoch - 0.5 * quad);
            out.slack.push(traj.envelope_slack());
            let mut dv = Vec::with_capacity(probes.len());
            let mut ok = true;
            for &theta in &thetas {
                if theta == t {
                    dv.push(1.0);
                    continue;
                }
                let fv = first_variation(drift, &traj, cfg, theta)?;
                ok &= fv.within_gronwall();
                dv.push(fv.at(kt));
            }
            out.d_values.push(dv);
            out.gronwall.push(ok);
            if index < opts.retain {
                out.retained.push(traj.x().to_vec());
            }
        }
        Ok(out)
    };

    let nl = levels.len();
    let np = thetas.len();
    let weights = trapezoid_on(&thetas);
    let mut term = vec![Accumulator::default(); nl];
    let mut rn = vec![Accumulator::default(); nl];
    let mut slack = vec![f64::INFINITY; nl];
    let mut gron = vec![true; nl];
    let mut dist = vec![Accumulator::default(); nl * nl];
    let mut pointwise = vec![vec![Accumulator::default(); np]; nl];
    let mut diffs = vec![vec![Accumulator::default(); np * np]; nl];
    let mut sq_int = vec![Accumulator::default(); nl];
    let mut m1_int = vec![Accumulator::default(); nl];
    let mut holder = vec![Accumulator::default(); nl];
    let mut trajectories = Vec::new();

    let mut start = 0;
    while start < opts.paths {
        let end = (start + BATCH).min(opts.paths);
        let batch: Vec<Result<PathOutput>> = (start..end).into_par_iter().map(run_path).collect();
        for (offset, out) in batch.into_iter().enumerate() {
            let out = out?;
            for a in 0..nl {
                term[a].push(out.terminal[a]);
                rn[a].push(out.log_weight[a].exp());
                slack[a] = slack[a].min(out.slack[a]);
                gron[a] &= out.gronwall[a];
                for b in (a + 1)..nl {
                    dist[a * nl + b].push((out.terminal[a] - out.terminal[b]).powi(2));
                }
                if np > 0 {
                    let d = &out.d_values[a];
                    let (mut s1, mut s2, mut h) = (0.0, 0.0, 0.0);
                    for i in 0..np {
                        pointwise[a][i].push((d[i] - 1.0).powi(2));
                        s1 += weights[i] * d[i] * d[i];
                        s2 += weights[i] * (d[i] - 1.0).powi(2);
                        for j in (i + 1)..np {
                            let sq = (d[i] - d[j]).powi(2);
                            diffs[a][i * np + j].push(sq);
                            // symmetric integrand: both (i, j) and (j, i)
                            h += 2.0 * weights[i] * weights[j] * sq / (thetas[j] - thetas[i]).powf(1.0 + 2.0 * opts.beta);
                        }
                    }
                    sq_int[a].push(s1);
                    m1_int[a].push(s2);
                    holder[a].push(h);
                }
            }
            for (a, x) in out.retained.into_iter().enumerate() {
                trajectories.push(RetainedPath {
                    path: start + offset,
                    level: levels[a].level(),
                    dim: levels[a].dim(),
                    x,
                });
            }
        }
        start = end;
    }

    let level_summaries = (0..nl)
        .map(|a| LevelSummary {
            level: levels[a].level(),
            dim: levels[a].dim(),
            terminal: term[a].finish(),
            rn_weight: rn[a].finish(),
            min_envelope_slack: slack[a],
            gronwall_ok: gron[a],
        })
        .collect();
    let mut distances = Vec::new();
    for a in 0..nl {
        for b in (a + 1)..nl {
            distances.push(PairDistance {
                a,
                b,
                level_a: levels[a].level(),
                level_b: levels[b].level(),
                dim_a: levels[a].dim(),
                dim_b: levels[b].dim(),
                estimate: dist[a * nl + b].finish(),
            });
        }
    }
    let malliavin = if np == 0 {
        Vec::new()
    } else {
        (0..nl)
            .map(|a| LevelMalliavin {
                level: levels[a].level(),
                dim: levels[a].dim(),
                t,
                beta: opts.beta,
                thetas: thetas.clone(),
                pointwise_minus_one: pointwise[a].iter().map(Accumulator::finish).collect(),
                differences: (0..np)
                    .flat_map(|i| ((i + 1)..np).map(move |j| (i, j)))
                    .map(|(i, j)| ThetaPair {
                        i,
                        j,
                        estimate: diffs[a][i * np + j].finish(),
                    })
                    .collect(),
                sq_integral: sq_int[a].finish(),
                minus_one_integral: m1_int[a].finish(),
                holder: holder[a].finish(),
                gronwall_ok: gron[a],
            })
            .collect()
    };

    Ok(EnsembleResult {
        paths: opts.paths,
        t,
        levels: level_summaries,
        distances,
        malliavin,
        trajectories,
    })
}
