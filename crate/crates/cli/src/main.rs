use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{DetectArgs, Failure, LeverageArgs, OptionMatchArgs, SimulateArgs, SweepArgs};

/// Kelly rebalancing under price impact: leverage, feedback dynamics, phase
/// diagrams, option replication and phase detection.
#[derive(Debug, Parser)]
#[command(name = "kelly-impact", version)]
struct Cli {
    /// JSON file of parameter values; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kelly-optimal leverage ratio, for Brownian or a named Levy model.
    Leverage(LeverageArgs),
    /// Iterate the rebalance/impact feedback map and write the trajectory.
    Simulate(SimulateArgs),
    /// Phase diagram over leverage and impact exponent.
    Sweep(SweepArgs),
    /// Find a call whose replicating portfolio is the Kelly portfolio.
    OptionMatch(OptionMatchArgs),
    /// Detect the phase of a return sequence and print the advised action.
    Detect(DetectArgs),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = cli
        .config
        .as_deref()
        .map(config::load)
        .transpose()
        .map_err(Failure::Usage)?;
    match cli.command {
        Command::Leverage(args) => commands::leverage(args, file),
        Command::Simulate(args) => commands::simulate(args, file),
        Command::Sweep(args) => commands::sweep(args, file),
        Command::OptionMatch(args) => commands::option_match(args, file),
        Command::Detect(args) => commands::detect(args, file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
