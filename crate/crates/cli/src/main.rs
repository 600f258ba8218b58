//! `holonomy`: batch front end for geometric-phase computations.
//!
//! Exit codes: 0 success, 1 tolerance breach, 2 invalid configuration,
//! 3 numerical or output failure. `HOLONOMY_LOG` sets the log filter.

mod commands;
mod config;
mod custom;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use holonomy::propagate::Method;

use crate::commands::{CliError, Context};
use crate::config::{Overrides, ScenarioConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Midpoint,
    Magnus4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Midpoint => Method::MidpointExp,
            MethodArg::Magnus4 => Method::Magnus4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "holonomy", version, about = "Noncyclic geometric phases, holonomies and adiabatic studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of time steps along the curve.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    /// Seed for the random gauges.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for independent work items; 1 runs sequentially.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Emit the closing stderr diagnostic as JSON.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase profile along the curve plus a terminal summary.
    Phase,
    /// Cross-check the quadrupole closed forms.
    OracleVerify,
    /// Terminal summaries over a range of one scenario parameter.
    Sweep,
    /// Distance between exact and adiabatic propagators over a τ ladder.
    Adiabatic,
    /// Random smooth gauges must leave the traces invariant.
    GaugeTest,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        out: cli.out,
        grid: cli.grid,
        method: cli.method.map(Method::from),
        seed: cli.seed,
        workers: cli.workers,
    };
    let cfg = ScenarioConfig::load(cli.config.as_deref(), &overrides)?;
    log::debug!("configuration: {cfg:?}");
    let ctx = Context { cfg, json: cli.json };
    match cli.command {
        Command::Phase => commands::phase(&ctx),
        Command::OracleVerify => commands::oracle_verify(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Adiabatic => commands::adiabatic(&ctx),
        Command::GaugeTest => commands::gauge_test(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HOLONOMY_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("holonomy: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
