//! `pnstokes` command-line experiments.
//!
//! Exit codes: 0 pass, 1 failed assertion or other error, 2 configuration
//! error, 3 soft monitor flag, 4 solver divergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pnstokes::Error;

use commands::Outcome;
use config::{Command, RunConfig};

#[derive(Parser)]
#[command(name = "pnstokes", version, about = "Shear-thinning p-Navier-Stokes experiments on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify the smallness budget and write budget.json.
    Constants(RunArgs),
    /// Integrate one trajectory with monitors.
    Simulate(RunArgs),
    /// Iterate the period map to the time-periodic solution.
    Periodic(RunArgs),
    /// Cut the force at t_f and time the extinction.
    Extinction(RunArgs),
    /// Pseudo-time integration to a steady solution.
    Steady(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Constants(a) => (Command::Constants, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Periodic(a) => (Command::Periodic, a),
        Cmd::Extinction(a) => (Command::Extinction, a),
        Cmd::Steady(a) => (Command::Steady, a),
    };
    let cfg = match RunConfig::load(&args.config, command, args.seed) {
        Ok(c) => c,
        Err(problems) => {
            eprintln!("invalid configuration {}:", args.config.display());
            for p in problems {
                eprintln!("  - {p}");
            }
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("cannot create {}: {e}", args.out.display());
        return ExitCode::from(1);
    }
    let result = match command {
        Command::Constants => commands::constants(&cfg, &args.out),
        Command::Simulate => commands::simulate_cmd(&cfg, &args.out),
        Command::Periodic => commands::periodic(&cfg, &args.out),
        Command::Extinction => commands::extinction(&cfg, &args.out),
        Command::Steady => commands::steady(&cfg, &args.out),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Flagged(flags)) => {
            for f in flags {
                eprintln!("flag: {f}");
            }
            ExitCode::from(3)
        }
        Ok(Outcome::Failed(why)) => {
            for w in why {
                eprintln!("failed: {w}");
            }
            ExitCode::from(1)
        }
        Err(e @ Error::Diverged { .. }) => {
            eprintln!("{e}; partial outputs kept in {}", args.out.display());
            ExitCode::from(4)
        }
        Err(e @ (Error::Config(_) | Error::Precondition(_) | Error::Argument(_))) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
