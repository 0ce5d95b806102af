//! `keygraph`: exact probabilities, simulations, the enumeration oracle,
//! bound audits and parameter sweeps for random key graphs.
//!
//! Exit codes: 0 success, 1 audit violation, 2 usage or parameter error,
//! 3 resource or budget error.

mod commands;
mod events;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AuditArgs, ExactArgs, OracleArgs, Outcome, SimulateArgs, SweepArgs};

#[derive(Debug, Parser)]
#[command(name = "keygraph", version, about = "Random key graph toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form probabilities and bounds.
    Exact(ExactArgs),
    /// Monte Carlo estimates with 95% Wilson intervals.
    Simulate(SimulateArgs),
    /// Connectivity over an (n, alpha) grid, as CSV.
    Sweep(SweepArgs),
    /// Exact probabilities by enumerating every ring assignment.
    Oracle(OracleArgs),
    /// Checks every finite-n inequality over a parameter grid.
    BoundsAudit(AuditArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let budget = err
        .chain()
        .filter_map(|e| e.downcast_ref::<keygraph::Error>())
        .any(|e| e.is_budget());
    if budget {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Exact(a) => commands::cmd_exact(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Sweep(a) => commands::cmd_sweep(a),
        Command::Oracle(a) => commands::cmd_oracle(a),
        Command::BoundsAudit(a) => commands::cmd_audit(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
