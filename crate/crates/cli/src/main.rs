//! `qspace`: reproducible runs of the algebra, coset, coherent-state,
//! projective and contraction experiments.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 tolerance failure.

// `!(err <= tol)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{algebra, coherent, contract, coset, evolve};

#[derive(Parser, Debug)]
#[command(name = "qspace", version, about = "Quantum phase space and contraction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lie algebra tables.
    #[command(subcommand)]
    Algebra(AlgebraCommand),
    /// Group actions on the coset spaces.
    #[command(subcommand)]
    Coset(CosetCommand),
    /// Coherent-state overlaps and matrix elements.
    #[command(subcommand)]
    Coherent(CoherentCommand),
    /// Schrödinger flow against the Hamiltonian flow on phase coordinates.
    Evolve(evolve::EvolveArgs),
    /// Small-hbar contraction experiments.
    #[command(subcommand)]
    Contract(ContractCommand),
}

#[derive(Subcommand, Debug)]
enum AlgebraCommand {
    /// Jacobi residuals, bracket tables and contraction limits.
    Verify(algebra::VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum CosetCommand {
    /// Orbit of a point under a group element or an infinitesimal flow.
    Orbit(coset::OrbitArgs),
}

#[derive(Subcommand, Debug)]
enum CoherentCommand {
    /// Overlap kernel and matrix elements on a square label grid.
    Overlap(coherent::OverlapArgs),
}

#[derive(Subcommand, Debug)]
enum ContractCommand {
    /// Overlap decay against 1/hbar for label pairs.
    Sweep(contract::SweepArgs),
    /// Coherent-center trajectory against the classical flow.
    Classical(contract::ClassicalArgs),
    /// Position-eigenstate proxies as hbar shrinks.
    Position(contract::PositionArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Algebra(AlgebraCommand::Verify(a)) => algebra::run(&a),
        Command::Coset(CosetCommand::Orbit(a)) => coset::run(&a),
        Command::Coherent(CoherentCommand::Overlap(a)) => coherent::run(&a),
        Command::Evolve(a) => evolve::run(&a),
        Command::Contract(ContractCommand::Sweep(a)) => contract::run_sweep(&a),
        Command::Contract(ContractCommand::Classical(a)) => contract::run_classical(&a),
        Command::Contract(ContractCommand::Position(a)) => contract::run_position(&a),
    };
    match outcome {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(o) => {
            for f in &o.failures {
                eprintln!("tolerance failure: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
