//! Command-line front end: `hamschrod <command> --config <path> [--out <dir>]`.
//!
//! Commands: `run`, `sweep-c0`, `compare-backends`, `schrodingerise`.
//! Artifacts land in `--out`, then the config's `outputs` field, then `./out`.
//! Diagnostics are JSON lines on standard error; exit codes: 0 success,
//! 2 divergence, 3 backend failure, 1 anything else.
//! `HAMSCHROD_THREADS` caps the worker pool (0 or unset = automatic).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hamschrod::error::Error;
use hamschrod::runner::{execute, parse_config_for_command, Command};

#[derive(Parser)]
#[command(
    name = "hamschrod",
    about = "Homotopy decomposition of nonlinear evolution PDEs with classical \
             and quantum-emulation linear solvers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `outputs` field).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Solve with the configured backend.
    Run(CommonArgs),
    /// Sweep the convergence-control parameter, then solve at the winner.
    SweepC0(CommonArgs),
    /// Solve with both backends and report their disagreement.
    CompareBackends(CommonArgs),
    /// Solve via the quantum-emulation backend.
    Schrodingerise(CommonArgs),
}

fn apply_thread_cap() {
    if let Ok(raw) = std::env::var("HAMSCHROD_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(0) => {}
            Ok(n) => {
                // A second initialization (e.g. under tests) is harmless.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            Err(_) => {
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "level": "warn",
                        "event": "bad_thread_cap",
                        "value": raw,
                        "message": "HAMSCHROD_THREADS must be a non-negative integer; using auto",
                    })
                );
            }
        }
    }
}

fn dispatch(command: Command, args: &CommonArgs) -> Result<(), Error> {
    let document = fs::read_to_string(&args.config)?;
    let config = parse_config_for_command(&document, Some(command))?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.outputs.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let written = execute(&config, &out_dir)?;
    eprintln!(
        "{}",
        serde_json::json!({
            "level": "info",
            "event": "artifacts_written",
            "files": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    apply_thread_cap();
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        CliCommand::Run(args) => (Command::Run, args),
        CliCommand::SweepC0(args) => (Command::SweepC0, args),
        CliCommand::CompareBackends(args) => (Command::CompareBackends, args),
        CliCommand::Schrodingerise(args) => (Command::Schrodingerise, args),
    };
    match dispatch(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!(
                "{}",
                serde_json::json!({
                    "level": "error",
                    "kind": error.kind(),
                    "message": error.to_string(),
                })
            );
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
