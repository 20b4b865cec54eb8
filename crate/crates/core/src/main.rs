use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdde::harness::{run, ExperimentConfig, Mode};

#[derive(Parser)]
#[command(name = "sdde", version, about = "Simulation and verification runs for singular delay equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration; the canonical preset is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and dump trajectories.
    Simulate(Common),
    /// Run the exact-identity suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated suite names; an empty string selects none.
        #[arg(long)]
        suite: Option<String>,
        /// Relative perturbation of the closed simplex formula.
        #[arg(long)]
        inject_fault: Option<f64>,
    },
    /// Evaluate the standing assumptions.
    Check(Common),
    /// Coupled distances across mollification levels and dimensions.
    Converge(Common),
    /// Malliavin estimates against the explicit bounds.
    Malliavin(Common),
}

fn load(mode: Mode, common: &Common) -> sdde::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::canonical(mode),
    };
    cfg.mode = mode;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(paths) = common.paths {
        cfg.paths = paths;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common, suite, fault) = match cli.command {
        Command::Simulate(c) => (Mode::Simulate, c, None, None),
        Command::Verify { common, suite, inject_fault } => (Mode::Verify, common, suite, inject_fault),
        Command::Check(c) => (Mode::Check, c, None, None),
        Command::Converge(c) => (Mode::Converge, c, None, None),
        Command::Malliavin(c) => (Mode::Malliavin, c, None, None),
    };
    let outcome = load(mode, &common).and_then(|mut cfg| {
        if let Some(s) = suite {
            cfg.verify.suites = Some(s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect());
        }
        if fault.is_some() {
            cfg.verify.inject_fault = fault;
        }
        run(&cfg, Some(&common.out))
    });
    match outcome {
        Ok(o) => {
            println!("{} {} config={}", o.mode.name(), if o.pass { "PASS" } else { "FAIL" }, o.config_hash);
            for path in &o.written {
                println!("  wrote {}", path.display());
            }
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
