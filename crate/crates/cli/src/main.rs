use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kerr_qsd_cli::commands::{dispatch, Command};
use kerr_qsd_cli::config::parse_config;
use kerr_qsd_cli::executor::Threads;
use kerr_qsd_cli::validate::{run_all, CRITERIA};

#[derive(Parser)]
#[command(name = "kerr-qsd", version, about = "Quantum state diffusion for the driven damped Kerr oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set seed=7`. Repeatable.
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classical stationary branches over a detuning range.
    ClassicalSweep(RunArgs),
    /// Exact steady-state moments over a detuning range.
    QuantumSteady(RunArgs),
    /// Bistability verdict on a grid of reduced coordinates.
    DomainMap(RunArgs),
    /// A single trajectory.
    Trajectory(RunArgs),
    /// Ensemble means and standard errors.
    Ensemble(RunArgs),
    /// Dwell times between the two basins.
    Transitions(RunArgs),
    /// Ensemble relaxation from one stable branch.
    Decay(RunArgs),
    /// Up-then-down detuning sweep.
    Hysteresis(RunArgs),
    /// Run the acceptance criteria and print a pass/fail table.
    Validate {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let exec = Threads::from_env();
    let (cmd, args) = match cli.command {
        Cmd::Validate { only } => {
            let ids: Vec<u8> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only };
            let outcomes = run_all(&ids, &exec, |o| println!("{}", o.line()));
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            return Ok(failed == 0);
        }
        Cmd::ClassicalSweep(a) => (Command::ClassicalSweep, a),
        Cmd::QuantumSteady(a) => (Command::QuantumSteady, a),
        Cmd::DomainMap(a) => (Command::DomainMap, a),
        Cmd::Trajectory(a) => (Command::Trajectory, a),
        Cmd::Ensemble(a) => (Command::Ensemble, a),
        Cmd::Transitions(a) => (Command::Transitions, a),
        Cmd::Decay(a) => (Command::Decay, a),
        Cmd::Hysteresis(a) => (Command::Hysteresis, a),
    };
    let cfg = parse_config(args.config.as_deref(), &args.set).context("invalid configuration")?;
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    dispatch(cmd, &cfg, &exec, &mut out)?;
    out.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
