//! `gflow` command-line front end.

mod commands;
mod ingest;

pub use commands::{
    cmd_certify, cmd_examples, cmd_kovacic, cmd_simulate, cmd_variational, exit_code, RunConfig, EXIT_ERROR,
};
pub use ingest::{ingest_dataset, parse_dataset, IngestError};

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "gflow", version, about = "Non-integrability certificates for a one-neuron gradient flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a dataset (or every .csv in a directory); writes a JSON certificate.
    Certify {
        #[arg(long, default_value = "silu")]
        activation: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        b2hat: Option<f64>,
        /// Run the exact Kovacic check on the snapped normal form as well.
        #[arg(long)]
        rationalize: bool,
        #[arg(long)]
        condition3_literal: bool,
        #[arg(long, default_value_t = 1e-8)]
        r2_threshold: f64,
        /// Output file, or directory when `--data` is a directory. Stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for directory input.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Integrate the gradient flow and write a CSV trajectory.
    Simulate {
        #[arg(long, default_value = "silu")]
        activation: String,
        #[arg(long)]
        data: PathBuf,
        /// `w1,b1,w2,b2`, or `curve` for the start of the explicit integral curve.
        #[arg(long)]
        w0: String,
        #[arg(long, default_value = "0,10")]
        tspan: String,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturbation-order and tail-block checks; writes a JSON report.
    Variational {
        #[arg(long, default_value = "silu")]
        activation: String,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Run the perturbation test on a named control system instead.
        #[arg(long)]
        control: Option<String>,
        /// Perturbation direction `u1,u2,...`; defaults to a fixed generic vector.
        #[arg(long)]
        direction: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        t_star: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kovacic case analysis of `y'' = r(t) y`.
    Kovacic {
        expr: String,
        #[arg(long)]
        strict_signs: bool,
        #[arg(long)]
        condition3_literal: bool,
        #[arg(long)]
        json: bool,
    },
    /// First-integral drift and closed-form checks for a control system.
    Examples { name: String },
}

/// Parse and run; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
