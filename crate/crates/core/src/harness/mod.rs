//! Experiment configuration and the batch pipelines behind the `sdde` binary.
//!
//! A run reads one JSON configuration, executes one mode and writes
//! `summary.json`, `manifest.json` and, where applicable, `distances.csv` and
//! `trajectories.csv`. Every output carries the configuration hash; apart
//! from the timings in the manifest, reruns are byte-identical.

mod config;
mod pipelines;
mod verify;

pub use config::{AssumptionSection, DriftSection, ExperimentConfig, History, MalliavinSection, Mode, NoiseSection, Resolved, SolverSection, VerifySection, CANONICAL_SEED};
pub use pipelines::{
    build_lattice, run_check, run_converge, run_malliavin, run_simulate, CheckReport, ConvergeReport, LatticePoint, MalliavinReport, MonotoneCheck, ProbeComparison,
    SimulateReport,
};
pub use verify::{run_verify, CheckResult, VerifyReport, SUITES};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::solver::{EnsembleResult, PairDistance};

/// CSV schema version written into each header comment.
pub const CSV_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub mode: Mode,
    pub seed: u64,
    pub version: String,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
}

/// Result of one run: pass flag, JSON summary and what was written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub pass: bool,
    pub config_hash: String,
    pub summary: serde_json::Value,
    pub manifest: RunManifest,
    pub written: Vec<PathBuf>,
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let text = serde_json::to_string(cfg)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    mode: Mode,
    config_hash: &'a str,
    seed: u64,
    pass: bool,
    report: &'a T,
}

#[derive(Serialize)]
struct DistanceRow {
    a: usize,
    b: usize,
    level_a: usize,
    level_b: usize,
    dim_a: usize,
    dim_b: usize,
    mean: f64,
    se: f64,
    count: usize,
}

#[derive(Serialize)]
struct TrajectoryRow {
    path: usize,
    level: usize,
    dim: usize,
    step: usize,
    t: f64,
    x: f64,
}

fn csv_bytes<R: Serialize>(kind: &str, hash: &str, rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# sdde {kind} schema={CSV_SCHEMA} config={hash}")?;
    let mut w = csv::Writer::from_writer(buf);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| e.into_error().into())
}

fn distance_csv(hash: &str, distances: &[PairDistance]) -> Result<Vec<u8>> {
    csv_bytes(
        "distances",
        hash,
        distances.iter().map(|d| DistanceRow {
            a: d.a,
            b: d.b,
            level_a: d.level_a,
            level_b: d.level_b,
            dim_a: d.dim_a,
            dim_b: d.dim_b,
            mean: d.estimate.mean,
            se: d.estimate.se,
            count: d.estimate.count,
        }),
    )
}

fn trajectory_csv(hash: &str, ens: &EnsembleResult, dt: f64) -> Result<Vec<u8>> {
    csv_bytes(
        "trajectories",
        hash,
        ens.trajectories.iter().flat_map(|p| {
            p.x.iter().enumerate().map(move |(k, &x)| TrajectoryRow {
                path: p.path,
                level: p.level,
                dim: p.dim,
                step: k,
                t: k as f64 * dt,
                x,
            })
        }),
    )
}

struct Collected {
    pass: bool,
    summary: serde_json::Value,
    files: Vec<(&'static str, Vec<u8>)>,
}

fn collect<T: Serialize>(cfg: &ExperimentConfig, hash: &str, pass: bool, report: &T) -> Result<Collected> {
    let summary = serde_json::to_value(Summary {
        mode: cfg.mode,
        config_hash: hash,
        seed: cfg.seed,
        pass,
        report,
    })?;
    let mut text = serde_json::to_vec_pretty(&summary)?;
    text.push(b'\n');
    Ok(Collected {
        pass,
        summary,
        files: vec![("summary.json", text)],
    })
}

/// Executes `cfg.mode`; writes outputs to `out` when given.
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    cfg.validate()?;
    let hash = config_hash(cfg)?;
    let mut stages = Vec::new();

    let stage = Instant::now();
    let collected = match cfg.mode {
        Mode::Verify => {
            let rep = run_verify(cfg)?;
            collect(cfg, &hash, rep.pass(), &rep)?
        }
        Mode::Check => {
            let rep = run_check(cfg)?;
            collect(cfg, &hash, rep.pass(), &rep)?
        }
        Mode::Simulate => {
            let rep = run_simulate(cfg)?;
            let mut c = collect(cfg, &hash, true, &rep)?;
            c.files.push(("distances.csv", distance_csv(&hash, &rep.ensemble.distances)?));
            c.files.push(("trajectories.csv", trajectory_csv(&hash, &rep.ensemble, cfg.solver.dt)?));
            c
        }
        Mode::Converge => {
            let rep = run_converge(cfg)?;
            let mut c = collect(cfg, &hash, rep.pass(), &rep)?;
            c.files.push(("distances.csv", distance_csv(&hash, &rep.distances)?));
            if !rep.ensemble.trajectories.is_empty() {
                c.files.push(("trajectories.csv", trajectory_csv(&hash, &rep.ensemble, cfg.solver.dt)?));
            }
            c
        }
        Mode::Malliavin => {
            let rep = run_malliavin(cfg)?;
            collect(cfg, &hash, rep.pass(), &rep)?
        }
    };
    stages.push(StageTiming {
        stage: cfg.mode.name().to_string(),
        seconds: stage.elapsed().as_secs_f64(),
    });

    let mut written = Vec::new();
    let stage = Instant::now();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &collected.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
    }
    stages.push(StageTiming {
        stage: "write".to_string(),
        seconds: stage.elapsed().as_secs_f64(),
    });

    let mut manifest = RunManifest {
        config_hash: hash.clone(),
        mode: cfg.mode,
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        stages,
        outputs: collected.files.iter().map(|(n, _)| n.to_string()).collect(),
    };
    manifest.outputs.push("manifest.json".to_string());
    if let Some(dir) = out {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        std::fs::write(&path, text)?;
        written.push(path);
    }

    Ok(RunOutcome {
        mode: cfg.mode,
        pass: collected.pass,
        config_hash: hash,
        summary: collected.summary,
        manifest,
        written,
    })
}
