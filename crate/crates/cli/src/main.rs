//! `fastgate` command-line entry point.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Version of every `--json` document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "fastgate", version, about = "Fast two-ion geometric phase gates: simulate, optimize, sweep, budget, compile")]
pub struct Cli {
    /// Print a machine-readable JSON document on standard output.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "FASTGATE_PARALLEL", default_value_t = 0)]
    pub parallel: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Ld,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StreamFormat {
    Text,
    Binary,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one gate configuration through a solver.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "ld")]
        solver: Solver,
        /// Result document (JSON); trajectory CSV is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full solver: dump |ψ|² of the ↓↑ branch every N steps next to `--out`.
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Seed, screen, refine and Pareto-select pulse shapes.
    Optimize {
        space: PathBuf,
        #[arg(long, default_value_t = 500)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        rng: u64,
        /// Solution set (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a configuration over a list of parameter values.
    Sweep {
        config: PathBuf,
        /// One of gate_time, nu, omega_peak, eta_c, f_c, edge_time.
        #[arg(long)]
        param: String,
        /// Comma-separated values, or `start:stop:count` for a linear range.
        #[arg(long)]
        values: String,
        #[arg(long, value_enum, default_value = "full")]
        solver: Solver,
        /// CSV output; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error budget of one or more gate configurations.
    Budget {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Monte Carlo draws of the timing/amplitude sensitivity.
        #[arg(long, default_value_t = 100)]
        draws: usize,
        /// Keep the LD-calibrated Ω instead of matching the full-solver phase.
        #[arg(long)]
        no_recalibrate: bool,
    },
    /// Lower a pulse to an AWG amplitude stream.
    Compile {
        /// Gate configuration (TOML) or solution set (JSON).
        input: PathBuf,
        /// Solution to take from a solution set.
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, default_value_t = fastgate::waveform::DEFAULT_SAMPLE_RATE)]
        rate: f64,
        /// Quantize to this many bits.
        #[arg(long)]
        bits: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        format: StreamFormat,
        /// Transfer curve (two columns, drive optical) to pre-compensate.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a segmented envelope to a photodiode trace.
    Fit {
        trace: PathBuf,
        #[arg(long)]
        segments: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pre-distort a stream through the inverse of a transfer curve.
    Compensate {
        stream: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.parallel > 0 {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.parallel).build_global();
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
