//! Command-line pipeline for swing-angle work: calibrate on a detection
//! dataset, estimate per-frame angles, run replication studies, cross-check
//! with the width-based estimator, and replay streams with threshold alarms.

mod commands;
mod config;
mod errors;

use clap::{Parser, Subcommand};
use errors::CliError;

#[derive(Parser)]
#[command(
    name = "grabwatch",
    version,
    about = "Swing-angle estimation and monitoring for crane payloads from single-camera detections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the reference frame and estimate camera angle and swing variance
    Calibrate(commands::calibrate::CalibrateArgs),
    /// Estimate per-frame swing angles with fitted parameters
    Estimate(commands::estimate::EstimateArgs),
    /// Run the seeded replication study, optionally emitting a synthetic dataset
    Simulate(commands::simulate::SimulateArgs),
    /// Compare estimates against the width-based cross-check
    Validate(commands::validate::ValidateArgs),
    /// Replay a dataset as an event stream with threshold alarms
    Monitor(commands::monitor::MonitorArgs),
}

fn main() {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Calibrate(args) => commands::calibrate::run(&args),
        Command::Estimate(args) => commands::estimate::run(&args),
        Command::Simulate(args) => commands::simulate::run(&args),
        Command::Validate(args) => commands::validate::run(&args),
        Command::Monitor(args) => commands::monitor::run(&args),
    };
    if let Err(err) = result {
        err.emit();
        std::process::exit(err.exit_code());
    }
}
