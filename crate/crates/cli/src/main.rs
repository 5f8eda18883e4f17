//! `scuc`: modal analysis, RoCoF surface fitting, unit commitment, contingency simulation
//! and market settlement on a grid case.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod exit;
mod fit;
mod manifest;
mod modes;
mod settle;
mod simulate;
mod solve;

#[derive(Parser)]
#[command(name = "scuc", version, about = "Locational RoCoF-constrained unit commitment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, Fiedler vector and local/non-local split for an event bus.
    Modes(modes::ModesArgs),
    /// Fit local and non-local RoCoF surfaces for every generator bus.
    Fit(fit::FitArgs),
    /// Solve one or more model kinds over one or more penetration scenarios.
    Solve(solve::SolveArgs),
    /// Simulate a unit trip under a solved schedule.
    Simulate(simulate::SimulateArgs),
    /// Price and settle the schedules of a solve run.
    Settle(settle::SettleArgs),
}

/// Case selection shared by every command.
#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct CaseArgs {
    /// Case JSON; the bundled IEEE 24-bus case when omitted.
    #[arg(long)]
    pub case: Option<PathBuf>,
}

/// Frequency-dynamics parameters shared by fitting, solving and simulation.
#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct DynamicsArgs {
    /// Damping-to-inertia ratio (1/s).
    #[arg(long, default_value_t = 0.7)]
    pub gamma: f64,
    /// Measuring instant for local buses (s).
    #[arg(long, default_value_t = 0.0)]
    pub t1: f64,
    /// Measuring instant for non-local buses (s).
    #[arg(long, default_value_t = 0.4)]
    pub t2: f64,
    /// RoCoF measuring window (s).
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Modes(a) => modes::run(&a),
        Command::Fit(a) => fit::run(&a),
        Command::Solve(a) => solve::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Settle(a) => settle::run(&a),
    };
    match result {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::code_for(&e).into()
        }
    }
}
