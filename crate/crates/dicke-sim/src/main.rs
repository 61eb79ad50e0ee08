use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Driven circuit-QED simulator for tunable multi-qubit Rabi (Dicke) models.
#[derive(Parser)]
#[command(name = "dicke-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective-vs-driven fidelity scan over the horizon
    Scan(RunArgs),
    /// Two-qubit entangling gate generation and analysis
    Gate(RunArgs),
    /// Cat-state preparation with spin measurement
    Cat(RunArgs),
    /// GHZ-state preparation
    Ghz(RunArgs),
    /// Run the built-in invariant suite
    Validate,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to a key = value config file
    #[arg(long)]
    config: PathBuf,
    /// Output directory for series.csv, summary.csv, plot.svg, meta.txt
    #[arg(long)]
    out: PathBuf,
    /// Master seed for stochastic engines
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory count for the mcwf engine
    #[arg(long)]
    trajectories: Option<usize>,
    /// Boson truncation override
    #[arg(long)]
    fock_dim: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Scan(a) => ("scan", Some(a)),
        Command::Gate(a) => ("gate", Some(a)),
        Command::Cat(a) => ("cat", Some(a)),
        Command::Ghz(a) => ("ghz", Some(a)),
        Command::Validate => ("validate", None),
    };
    let code = match args {
        Some(a) => dicke_sim::cli::run(
            name,
            Some(&a.config),
            &a.out,
            &dicke_sim::cli::Overrides {
                seed: a.seed,
                trajectories: a.trajectories,
                fock_dim: a.fock_dim,
            },
        ),
        None => dicke_sim::cli::run(name, None, std::path::Path::new("."), &Default::default()),
    };
    ExitCode::from(code as u8)
}
