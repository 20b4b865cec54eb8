use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::drift::{DriftComponent, DriftSpec};
use crate::error::{Result, SddeError};
use crate::kernels::{l1_ceiling, AssumptionInput};
use crate::noise::{estimate_sln_constant, HurstWeightSpec, NoiseModel, TimeGrid};
use crate::segment::{build_basis, M2Element, SegmentGridConfig};
use crate::solver::SolverConfig;

pub const CANONICAL_SEED: u64 = 20261015;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Verify,
    Check,
    Converge,
    Malliavin,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Verify => "verify",
            Mode::Check => "check",
            Mode::Converge => "converge",
            Mode::Malliavin => "malliavin",
        }
    }
}

/// History of the initial segment on `[-r, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum History {
    Constant { value: f64 },
    /// Samples at `-r + j Δt`, `j = 0..=K`.
    Samples { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub horizon: f64,
    pub dt: f64,
    pub r: f64,
    pub epsilon: f64,
    pub eta_point: f64,
    pub history: History,
    /// Number of basis elements; defaults to the largest active dimension.
    #[serde(default)]
    pub basis_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub hurst: Vec<f64>,
    pub weights: Vec<f64>,
    /// Equidistant increments used for the non-determinism constants.
    pub sln_grid_points: usize,
    /// Explicit constants replacing the estimates.
    #[serde(default)]
    pub sln_override: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSection {
    Explicit {
        components: DriftSpec,
    },
    /// One step `height · 1_{[0, L_j)}` per noise component with
    /// `‖b_j‖_{L¹} = fraction · ceiling_j`, the ceiling of the sufficient
    /// smallness condition.
    CeilingSteps { height: f64, fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionSection {
    pub delta_h: f64,
    pub delta_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MalliavinSection {
    pub theta_cells: usize,
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Suites to run; `None` runs all of them.
    #[serde(default)]
    pub suites: Option<Vec<String>>,
    /// Relative perturbation applied to the closed simplex formula.
    #[serde(default)]
    pub inject_fault: Option<f64>,
    pub kernel_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub paths: usize,
    /// Trajectories written by `simulate`.
    pub retain: usize,
    pub levels: Vec<usize>,
    pub dims: Vec<usize>,
    pub solver: SolverSection,
    pub noise: NoiseSection,
    pub drift: DriftSection,
    pub assumptions: AssumptionSection,
    pub malliavin: MalliavinSection,
    pub verify: VerifySection,
}

/// Everything a pipeline needs, built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub grid: TimeGrid,
    pub solver: SolverConfig,
    pub noise: NoiseModel,
    pub drift: DriftSpec,
    pub sln: Vec<f64>,
}

impl ExperimentConfig {
    /// Small-horizon setting that satisfies all standing assumptions: one
    /// step component at the smallness ceiling. The fine grid keeps the
    /// Euler occupation error below the level-to-level distances up to
    /// `n = 32`.
    pub fn canonical(mode: Mode) -> Self {
        let paths = match mode {
            Mode::Converge => 20_000,
            Mode::Malliavin => 10_000,
            _ => 1_000,
        };
        Self {
            mode,
            seed: CANONICAL_SEED,
            paths,
            retain: 8,
            levels: vec![2, 4, 8, 16, 32],
            dims: vec![1],
            solver: SolverSection {
                horizon: 0.1,
                dt: 2.5e-5,
                r: 0.05,
                epsilon: 1.0,
                eta_point: 0.0,
                history: History::Constant { value: 0.0 },
                basis_size: None,
            },
            noise: NoiseSection {
                hurst: vec![0.3],
                weights: vec![1.0],
                sln_grid_points: 4,
                sln_override: None,
            },
            drift: DriftSection::CeilingSteps { height: 1.0, fraction: 1.0 },
            assumptions: AssumptionSection { delta_h: 0.05, delta_t: 0.05 },
            malliavin: MalliavinSection { theta_cells: 10, beta: None },
            verify: VerifySection {
                suites: None,
                inject_fault: None,
                kernel_samples: 10_000,
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SddeError::Config(msg));
        if self.paths == 0 {
            return fail("path count must be at least 1".into());
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return fail("mollification levels must be nonempty and positive".into());
        }
        if self.levels.windows(2).any(|w| w[0] > w[1]) {
            return fail("mollification levels must be sorted ascending".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) || self.dims.windows(2).any(|w| w[0] > w[1]) {
            return fail("dimensions must be nonempty, positive and sorted ascending".into());
        }
        if self.noise.hurst.len() != self.noise.weights.len() {
            return fail("noise.hurst and noise.weights differ in length".into());
        }
        if let Some(c) = &self.noise.sln_override {
            if c.len() != self.noise.hurst.len() {
                return fail("noise.sln_override must give one constant per component".into());
            }
        }
        if let DriftSection::CeilingSteps { height, fraction } = self.drift {
            if height == 0.0 || !(fraction > 0.0) {
                return fail("ceiling_steps needs nonzero height and positive fraction".into());
            }
        }
        if let Some(bad) = &self.verify.suites {
            if let Some(s) = bad.iter().find(|s| !super::verify::SUITES.contains(&s.as_str())) {
                return fail(format!("unknown verification suite '{s}'"));
            }
        }
        Ok(())
    }

    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(1)
    }

    /// Non-determinism constants, estimated or overridden.
    pub fn sln_constants(&self) -> Result<Vec<f64>> {
        if let Some(c) = &self.noise.sln_override {
            return Ok(c.clone());
        }
        self.noise
            .hurst
            .iter()
            .map(|&h| Ok(estimate_sln_constant(h, self.noise.sln_grid_points, self.solver.horizon)?.c_hat))
            .collect()
    }

    fn assumption_input_with(&self, l1_norms: Vec<f64>, sln: Vec<f64>) -> AssumptionInput {
        AssumptionInput {
            epsilon: self.solver.epsilon,
            delta_h: self.assumptions.delta_h,
            delta_t: self.assumptions.delta_t,
            r: self.solver.r,
            horizon: self.solver.horizon,
            hurst: self.noise.hurst.clone(),
            weights: self.noise.weights.clone(),
            l1_norms,
            sln,
        }
    }

    /// The drift section instantiated with constants `sln`.
    pub fn drift_spec(&self, sln: &[f64]) -> Result<DriftSpec> {
        match &self.drift {
            DriftSection::Explicit { components } => Ok(components.clone()),
            DriftSection::CeilingSteps { height, fraction } => {
                let d = self.noise.hurst.len();
                let probe = self.assumption_input_with(vec![0.0; d], sln.to_vec());
                let comps = (1..=d)
                    .map(|j| DriftComponent::step_with_l1(fraction * l1_ceiling(&probe, j)?, *height))
                    .collect::<Result<Vec<_>>>()?;
                DriftSpec::new(comps)
            }
        }
    }

    /// Assumption inputs over the drift components; every component needs a
    /// perturbation of its own.
    pub fn assumption_input(&self) -> Result<AssumptionInput> {
        let sln = self.sln_constants()?;
        let drift = self.drift_spec(&sln)?;
        let d = self.noise.hurst.len();
        if drift.components().len() > d {
            return Err(SddeError::Config(format!(
                "drift has {} components but only {d} are perturbed; the smallness constants are undefined",
                drift.components().len()
            )));
        }
        let l1 = drift.padded(d).l1_norms();
        Ok(self.assumption_input_with(l1, sln))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let s = &self.solver;
        let grid = TimeGrid::new(s.horizon, s.dt)?;
        let k = SegmentGridConfig::new(s.dt, s.r)?.k;
        let hist = match &s.history {
            History::Constant { value } => vec![*value; k + 1],
            History::Samples { values } => values.clone(),
        };
        let eta = M2Element::new(s.eta_point, hist, s.r)?;
        let sln = self.sln_constants()?;
        let drift = self.drift_spec(&sln)?;
        let dim = self.max_dim().max(drift.components().len());
        let basis = build_basis(s.r, s.basis_size.unwrap_or(dim), k)?;
        let solver = SolverConfig::new(s.horizon, s.dt, s.epsilon, eta, basis, dim)?;
        let noise = NoiseModel::new(grid, HurstWeightSpec::new(self.noise.hurst.clone(), self.noise.weights.clone())?)?;
        Ok(Resolved {
            grid,
            solver,
            noise,
            drift,
            sln,
        })
    }
}
