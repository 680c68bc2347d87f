//! `dnlslab` command-line driver.
//!
//! Exit status: 0 when every selected check passes, 1 when a check or suite
//! fails, 2 for an invalid configuration, 3 for I/O errors. A `summary.json`
//! with the resolved configuration is written in every case where the output
//! directory can be created.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use commands::{Outcome, RunError};
use config::{Command, ConfigError, DataArgs, EstimateArgs, GaugeArgs, GridArgs, OutputArgs, PhysicsArgs, RunConfig};
use output::OutDir;

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "dnlslab", version, about = "Pseudospectral laboratory for derivative NLS")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TrajectoryCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    physics: PhysicsArgs,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct GaugeCmd {
    #[command(flatten)]
    run: TrajectoryCmd,
    #[command(flatten)]
    gauge: GaugeArgs,
}

#[derive(Args)]
struct EstimatesCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    physics: PhysicsArgs,
    #[command(flatten)]
    estimates: EstimateArgs,
}

#[derive(Subcommand)]
enum Sub {
    /// Evolve initial data and export the trajectory.
    Simulate(TrajectoryCmd),
    /// Check the gauge identities and the gauged equation on a trajectory.
    GaugeCheck(GaugeCmd),
    /// Measure LHS/RHS ratios of one estimate over a test family.
    #[command(after_help = format!("Estimates: {}", config::Target::NAMES))]
    Estimates(EstimatesCmd),
    /// Littlewood-Paley block energies of a trajectory per band.
    Decompose(TrajectoryCmd),
    /// X_T and Y_T norm breakdowns of a trajectory.
    Norms(TrajectoryCmd),
}

impl Sub {
    /// Flag values as a configuration, the config path and the `--out` flag.
    fn into_parts(self) -> (RunConfig, Option<PathBuf>, Option<PathBuf>) {
        let traj = |cmd: Command, t: TrajectoryCmd, gauge: GaugeArgs| {
            let mut output = t.common.output;
            let out = output.out.take();
            let cfg = RunConfig {
                command: Some(cmd),
                grid: t.grid,
                physics: t.physics,
                data: t.data,
                gauge,
                output,
                ..RunConfig::default()
            };
            (cfg, t.common.config, out)
        };
        match self {
            Sub::Simulate(t) => traj(Command::Simulate, t, GaugeArgs::default()),
            Sub::GaugeCheck(g) => traj(Command::GaugeCheck, g.run, g.gauge),
            Sub::Decompose(t) => traj(Command::Decompose, t, GaugeArgs::default()),
            Sub::Norms(t) => traj(Command::Norms, t, GaugeArgs::default()),
            Sub::Estimates(e) => {
                let mut output = e.common.output;
                let out = output.out.take();
                let cfg = RunConfig {
                    command: Some(Command::Estimates),
                    grid: e.grid,
                    physics: e.physics,
                    estimates: e.estimates,
                    output,
                    ..RunConfig::default()
                };
                (cfg, e.common.config, out)
            }
        }
    }
}

enum Failure {
    Config(ConfigError),
    Run(RunError),
}

fn summary(cfg: &RunConfig, status: &str, results: Option<Value>, error: Option<String>, files: &[String]) -> Value {
    let mut s = json!({
        "schema": SCHEMA,
        "command": cfg.command,
        "config": cfg,
        "status": status,
        "pass": status == "pass",
        "files": files,
    });
    if let Some(r) = results {
        s["results"] = r;
    }
    if let Some(e) = error {
        s["error"] = json!(e);
    }
    s
}

fn execute(cfg: &RunConfig, out: &mut OutDir) -> Result<Outcome, Failure> {
    let jobs = cfg.jobs();
    if jobs > 0 {
        // only fails if a pool already exists, which cannot happen in a single run
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let format = cfg.format().map_err(Failure::Config)?;
    match cfg.command.expect("resolved configuration has a command") {
        Command::Simulate => {
            let plan = cfg.trajectory_plan().map_err(Failure::Config)?;
            commands::simulate(&plan, format, out).map_err(Failure::Run)
        }
        Command::GaugeCheck => {
            let plan = cfg.gauge_plan().map_err(Failure::Config)?;
            commands::gauge_check(&plan, out).map_err(Failure::Run)
        }
        Command::Estimates => {
            let plan = cfg.estimate_plan().map_err(Failure::Config)?;
            commands::estimates(&plan, out).map_err(Failure::Run)
        }
        Command::Decompose => {
            let plan = cfg.trajectory_plan().map_err(Failure::Config)?;
            commands::decompose(&plan, format, out).map_err(Failure::Run)
        }
        Command::Norms => {
            let plan = cfg.trajectory_plan().map_err(Failure::Config)?;
            commands::norms(&plan, format, out).map_err(Failure::Run)
        }
    }
}

fn resolve(flags: RunConfig, config_path: Option<&PathBuf>) -> Result<RunConfig, ConfigError> {
    let file = match config_path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let (Some(a), Some(b)) = (flags.command, file.command) {
        if a != b {
            return Err(ConfigError(format!("config file is for {b:?}, not {a:?}")));
        }
    }
    flags.over(&file).with_defaults()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, config_path, out_flag) = cli.command.into_parts();
    let fallback = flags.clone();
    let resolved = resolve(flags, config_path.as_ref());
    let (mut cfg, config_error) = match resolved {
        Ok(c) => (c, None),
        Err(e) => (fallback, Some(e)),
    };
    cfg.resolve_out(out_flag.as_ref());
    let out_path = cfg.output.out.clone().expect("output directory is resolved");

    let mut out = match OutDir::create(&out_path) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", out_path.display());
            return ExitCode::from(3);
        }
    };

    let (status, results, error, code) = match config_error {
        Some(e) => ("config_invalid", None, Some(e.to_string()), 2),
        None => match execute(&cfg, &mut out) {
            Ok(o) => {
                print!("{}", o.text);
                let status = if o.pass { "pass" } else { "fail" };
                (status, Some(o.results), None, if o.pass { 0 } else { 1 })
            }
            Err(Failure::Config(e)) => ("config_invalid", None, Some(e.to_string()), 2),
            Err(Failure::Run(e @ RunError::Io(_))) => ("io_error", None, Some(e.to_string()), 3),
            Err(Failure::Run(e)) => ("error", None, Some(e.to_string()), 1),
        },
    };
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    let files = out.written().to_vec();
    let s = summary(&cfg, status, results, error, &files);
    if let Err(e) = out.write_json("summary.json", &s) {
        eprintln!("error: cannot write summary: {e}");
        return ExitCode::from(3);
    }
    eprintln!("{status}: {}", out_path.join("summary.json").display());
    ExitCode::from(code)
}
