//! `taxflow` — command-line front end of the kinetic taxation model.
//!
//! Errors leave through a single funnel: a machine-readable JSON line on
//! stderr plus a stable exit code (2 configuration, 3 blow-up, 1 other).

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{prepare_output, SweepMode};
use crate::config::OutputFormat;
use crate::error::Result;

#[derive(Parser)]
#[command(
    name = "taxflow",
    version,
    about = "Kinetic model of income classes under taxation, welfare and tax evasion",
    long_about = "Integrates the class-population dynamics of a taxed, welfare-redistributing \
                  exchange economy and reports equilibrium observables. Sweeps run their grid \
                  points in parallel; set RAYON_NUM_THREADS to pick the worker count — results \
                  are identical for any value."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the dynamics; write the trajectory and a summary
    Simulate(RunArgs),
    /// Integrate to equilibrium; write the class histogram and a summary
    Equilibrium(RunArgs),
    /// Integrate two configurations and report per-class deltas
    Compare(CompareArgs),
    /// Tabulate equilibria over a parameter grid, or search the
    /// coupling-ratio threshold
    Sweep(SweepArgs),
    /// Delayed self-distance of the trajectory: series, decay fit,
    /// convergence time
    Convergence(ConvergenceArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory (default: [output] dir, else the current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Data-file format (default: [output] format, else csv)
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Significant digits for CSV floats, written in scientific notation
    /// (default: shortest exact representation)
    #[arg(long)]
    precision: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Baseline configuration
    #[arg(long)]
    config_a: PathBuf,
    /// Alternative configuration (must share class count, income grid and
    /// initial mean income with the baseline)
    #[arg(long)]
    config_b: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Path to the TOML run configuration (needs a [sweep] section)
    #[arg(long)]
    config: PathBuf,
    /// Override the coupled-sweep ratio from the file
    #[arg(long, conflicts_with = "bracket")]
    ratio: Option<f64>,
    /// Bisect for the smallest coupling ratio with an interior Gini minimum
    /// inside this bracket, instead of tabulating the grid
    #[arg(long, value_parser = parse_bracket, value_name = "LO,HI")]
    bracket: Option<(f64, f64)>,
    /// Stop the threshold search once the bracket is this narrow
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    /// Also dump every computed equilibrium histogram
    #[arg(long)]
    dump_states: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Comparison delay of the self-distance norm
    #[arg(long, default_value_t = 100.0)]
    xi: f64,
    /// Distance threshold defining the convergence time
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_bracket(text: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got {text:?}"))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad bracket endpoint {s:?}: {e}"))
    };
    Ok((parse(lo)?, parse(hi)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let run = commands::load_config(&args.config)?;
            let ctx = prepare_output(&run, args.output.out, args.output.format, args.output.precision)?;
            commands::simulate(&run, &ctx)
        }
        Command::Equilibrium(args) => {
            let run = commands::load_config(&args.config)?;
            let ctx = prepare_output(&run, args.output.out, args.output.format, args.output.precision)?;
            commands::equilibrium(&run, &ctx)
        }
        Command::Compare(args) => {
            let run_a = commands::load_config(&args.config_a)?;
            let run_b = commands::load_config(&args.config_b)?;
            let ctx =
                prepare_output(&run_a, args.output.out, args.output.format, args.output.precision)?;
            commands::compare(&run_a, &run_b, &ctx)
        }
        Command::Sweep(args) => {
            let run = commands::load_config(&args.config)?;
            let ctx = prepare_output(&run, args.output.out, args.output.format, args.output.precision)?;
            let mode = SweepMode {
                ratio: args.ratio,
                bracket: args.bracket,
                tol: args.tol,
                dump_states: args.dump_states,
            };
            commands::sweep(&run, &mode, &ctx)
        }
        Command::Convergence(args) => {
            let run = commands::load_config(&args.config)?;
            let ctx = prepare_output(&run, args.output.out, args.output.format, args.output.precision)?;
            commands::convergence(&run, args.xi, args.eps, &ctx)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({
                "error": e.to_string(),
                "kind": e.kind(),
            });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
