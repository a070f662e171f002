use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod demo;
mod render;

use commands::Failure;

/// Degradable/antidegradable channel embeddings and certified diamond norms.
#[derive(Debug, Parser)]
#[command(name = "channelforge", version)]
pub struct Cli {
    /// Render results as a human-readable table instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,

    /// Write the result to this file instead of standard output.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Degradable,
    Antidegradable,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a circuit to its Choi matrix (or its Stinespring dilation).
    Compile {
        circuit: PathBuf,
        #[arg(long)]
        stinespring: bool,
    },
    /// Embed a circuit into a degradable or antidegradable channel.
    Embed {
        circuit: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Check the mate identity and fail with exit code 4 if it does not hold.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Check the mate identity of an embedding document.
    Verify {
        embedding: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Certified diamond-norm distance between two channels.
    Dnorm {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Include the optimal input state.
        #[arg(long)]
        witness: bool,
    },
    /// Decide the promise problem `distance >= a` versus `distance <= b`.
    Distinguish {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Tensor power of a channel.
    Repeat {
        channel: PathBuf,
        #[arg(short, long)]
        k: usize,
    },
    /// Number of copies and slack that amplify a promise gap.
    Params {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Semidefinite test for degradability or antidegradability.
    Feasibility {
        channel: PathBuf,
        #[arg(long, value_enum)]
        property: Mode,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Include the mate's Choi matrix in the report.
        #[arg(long)]
        certificate: bool,
    },
    /// End-to-end run on a random pair of qubit circuits.
    Demo {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
