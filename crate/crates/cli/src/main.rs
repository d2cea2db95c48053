//! Batch entry point for the N-sensor quickest-detection toolkit.
//!
//! Subcommands: `simulate | calibrate | mc | pde | report`. Each experiment
//! is driven by a JSON config file, command-line flags override file values,
//! and every output embeds the config hash and seed. Exit code is zero iff
//! all requested computations completed; failures print a machine-readable
//! JSON error to stderr.

mod commands;
mod config;
mod output;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ncusum", version, about = "Multi-sensor CUSUM quickest-detection experiments")]
struct Cli {
    /// Worker threads for replication-parallel runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sensor paths and dump them as CSV.
    Simulate(commands::SimulateArgs),
    /// Solve a threshold from a false-alarm target.
    Calibrate(commands::CalibrateArgs),
    /// Monte Carlo estimation of delay / false-alarm functionals.
    Mc(commands::McArgs),
    /// Finite-difference verification of the exit-energy asymptotics.
    Pde(commands::PdeArgs),
    /// Consolidate results from prior runs into summary tables.
    Report(commands::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // A re-init error just means a pool already exists; harmless here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Calibrate(args) => commands::cmd_calibrate(args),
        Command::Mc(args) => commands::cmd_mc(args),
        Command::Pde(args) => commands::cmd_pde(args),
        Command::Report(args) => commands::cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let doc = serde_json::json!({
                "error": format!("{err}"),
                "kind": error_kind(&err),
            });
            eprintln!("{doc}");
            ExitCode::FAILURE
        }
    }
}

fn error_kind(err: &ncusum_core::error::Error) -> &'static str {
    use ncusum_core::error::Error::*;
    match err {
        InvalidConfig(_) => "invalid_config",
        ModelSensorMismatch { .. } => "model_sensor_mismatch",
        NonFinite(_) => "non_finite",
        BadInterval { .. } => "bad_interval",
        NonPositiveThreshold(_) => "non_positive_threshold",
        NonPositiveGamma(_) => "non_positive_gamma",
        BudgetExceeded { .. } => "budget_exceeded",
        SolveFailed(_) => "solve_failed",
        Io(_) => "io",
        Serialization(_) => "serialization",
    }
}
