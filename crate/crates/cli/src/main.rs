//! `brcap`: capacity bounds, horizon verification, coding simulation, and
//! bandwidth/storage tradeoff tables for broadcast-repair storage.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 invalid input,
//! 3 an enumeration refused to run under its cap.

mod commands;
mod config;

use std::path::PathBuf;

use brcap_core::{Field, Horizon};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Errors surfaced to the shell, keyed by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file, or parameters (exit 2).
    Input(String),
    /// A checked property failed to hold (exit 1).
    Verification(String),
    /// An enumeration would exceed its configured cap (exit 3).
    CapExceeded(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::CapExceeded(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Verification(msg) | CliError::CapExceeded(msg) => {
                write!(f, "{msg}")
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "brcap", version, about = "Broadcast-repair storage capacity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the storage capacity bound for a parameter set.
    Capacity(CapacityArgs),
    /// Check capacity monotonicity and tightness over a horizon sweep.
    Verify(VerifyArgs),
    /// Run a coding simulation over an adversarial or supplied schedule.
    Simulate(SimulateArgs),
    /// Emit bandwidth/storage tradeoff tables.
    Tradeoff(TradeoffArgs),
    /// Max-flow of a serialized schedule with a collector attached.
    Mincut(MincutArgs),
}

/// System parameters shared by the analysis commands.  Each can come from
/// a flag or from the JSON config file; flags win.
#[derive(Debug, Args)]
pub struct ParamArgs {
    /// JSON config file; explicit flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Initial number of storage nodes.
    #[arg(long)]
    pub n: Option<u32>,
    /// Reconstruction degree: any k active nodes recover the file.
    #[arg(long)]
    pub k: Option<u32>,
    /// Helpers contacted per repair round.
    #[arg(long)]
    pub d: Option<u32>,
    /// Failures per repair round.
    #[arg(long)]
    pub r: Option<u32>,
    /// Packets stored per node.
    #[arg(long)]
    pub alpha: Option<u64>,
    /// Packets broadcast per helper per round.
    #[arg(long)]
    pub beta: Option<u64>,
    /// Repair rounds: a count or "unbounded".
    #[arg(long = "rounds", value_parser = config::parse_horizon)]
    pub rounds: Option<Horizon>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Largest horizon in the sweep (default: k + 1).
    #[arg(long)]
    pub tmax: Option<u32>,
    /// Skip the exhaustive sweep; check the adversarial schedule only.
    #[arg(long)]
    pub adversarial_only: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Coding discipline for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodeKind {
    /// Uniformly random coefficients at every combination point.
    Rlnc,
    /// Deterministic kernel search with a randomized fallback.
    Generic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// PRNG seed (required: every simulation is randomized).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Coding discipline (default: rlnc).
    #[arg(long, value_enum)]
    pub code: Option<CodeKind>,
    /// Code dimension; defaults to the schedule's capacity.
    #[arg(long)]
    pub omega: Option<usize>,
    /// Field: a prime (e.g. 47) or a binary extension (e.g. 2^8).
    #[arg(long, value_parser = config::parse_field)]
    pub field: Option<Field>,
    /// Simulate this serialized schedule instead of the adversarial one.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Write a JSON-lines stage trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    /// JSON config file; explicit flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reconstruction degree.
    #[arg(long)]
    pub k: Option<u32>,
    /// Helpers contacted per repair round.
    #[arg(long)]
    pub d: Option<u32>,
    /// Failures per repair round.
    #[arg(long)]
    pub r: Option<u32>,
    /// Points sampled along each curve (default: 33).
    #[arg(long)]
    pub samples: Option<u32>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write an exact-rational JSON sidecar here.
    #[arg(long)]
    pub exact_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MincutArgs {
    /// Serialized schedule (JSON).
    #[arg(long)]
    pub instance: PathBuf,
    /// Stage at which the collector connects.
    #[arg(long)]
    pub stage: u32,
    /// Comma-separated collector node ids, e.g. "5,6".
    #[arg(long)]
    pub collector: String,
    /// Write the graph (vertex table + edge list) here.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Capacity(args) => commands::capacity(args),
        Command::Verify(args) => commands::verify(args),
        Command::Simulate(args) => commands::simulate(args),
        Command::Tradeoff(args) => commands::tradeoff(args),
        Command::Mincut(args) => commands::mincut(args),
    }
}

fn main() {
    // Rust masks SIGPIPE, so a downstream `head` closing the pipe would turn
    // every later print into a panic; restore the default die-quietly behavior.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
