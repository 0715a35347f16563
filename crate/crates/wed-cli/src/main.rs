//! `wed` — experiment driver for the weighted energy-dissipation trajectory
//! solver. Subcommands: `minimize`, `sweep`, `reference`, `validate`.

mod commands;
mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::ExperimentConfig;

const PRESET_FIG1: &str = include_str!("../presets/fig1.conf");
const PRESET_KLEIN_GORDON: &str = include_str!("../presets/klein-gordon.conf");
const PRESET_WAVE1D: &str = include_str!("../presets/wave1d.conf");

#[derive(Parser)]
#[command(
    name = "wed",
    about = "Weighted energy-dissipation trajectory experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SourceArgs {
    /// Configuration file path.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named embedded preset: fig1 | klein-gordon | wave1d.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides the configured one).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: machine parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one minimization (single eps) and write trajectory + summary CSVs.
    Minimize(SourceArgs),
    /// Run the vanishing-eps sweep against the limit reference.
    Sweep(SourceArgs),
    /// Integrate the limit equation only.
    Reference(SourceArgs),
    /// Run the cross-module invariant suite.
    Validate {
        #[command(flatten)]
        source: SourceArgs,
        /// Test hook: flip the gradient sign so the finite-difference check
        /// must fail (exercises the validator itself).
        #[arg(long)]
        fault_grad: bool,
    },
}

fn load_config(source: &SourceArgs) -> Result<ExperimentConfig, CliError> {
    let text = match (&source.config, &source.preset) {
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => match name.as_str() {
            "fig1" => PRESET_FIG1.to_string(),
            "klein-gordon" => PRESET_KLEIN_GORDON.to_string(),
            "wave1d" => PRESET_WAVE1D.to_string(),
            other => {
                return Err(CliError::Config(format!(
                    "unknown preset '{other}' (available: fig1, klein-gordon, wave1d)"
                )))
            }
        },
        (None, None) => {
            return Err(CliError::Config("provide --config PATH or --preset NAME".into()))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids this combination"),
    };
    config::parse_config(&text).map_err(|e| CliError::Config(e.to_string()))
}

fn out_dir(cfg: &ExperimentConfig, source: &SourceArgs) -> PathBuf {
    source.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.directory))
}

fn jobs(source: &SourceArgs) -> usize {
    source.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    })
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Minimize(src) => {
            let cfg = load_config(&src)?;
            commands::run_minimize(&cfg, &out_dir(&cfg, &src))
        }
        Cmd::Sweep(src) => {
            let cfg = load_config(&src)?;
            commands::run_sweep(&cfg, &out_dir(&cfg, &src), jobs(&src))
        }
        Cmd::Reference(src) => {
            let cfg = load_config(&src)?;
            commands::run_reference(&cfg, &out_dir(&cfg, &src))
        }
        Cmd::Validate { source, fault_grad } => {
            // validate is self-contained; the config only steers output
            let (dir, precision) = match (&source.config, &source.preset) {
                (None, None) => (
                    source.out.clone().unwrap_or_else(|| PathBuf::from("out/validate")),
                    12,
                ),
                _ => {
                    let cfg = load_config(&source)?;
                    (out_dir(&cfg, &source), cfg.precision)
                }
            };
            validate::run_validate(&dir, precision, fault_grad)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
