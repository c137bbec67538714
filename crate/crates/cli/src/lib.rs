//! `prandtl-lab`: experiment driver around `prandtl-core`.
//!
//! Exit codes: 0 on success, 2 when a run finishes but fails its checks or
//! its configuration is invalid, 1 on command-line usage errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod accept;
pub mod commands;
pub mod config;
pub mod output;

pub use output::{emit_plot_script, PlotKind, VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] prandtl_core::Error),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn csv(path: &Path, e: csv::Error) -> Self {
        CliError::Invalid(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "prandtl-lab", version = VERSION, about = "Blow-up laboratory for the reduced 1D Prandtl equation")]
pub struct Cli {
    /// Flat key = value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate a self-similar profile G_k and its asymptotics.
    Profile(ProfileArgs),
    /// Hermite eigen-residuals, norms and random inequality trials.
    SpectralCheck(SpectralArgs),
    /// Integrate up to blow-up and fit the rates.
    Simulate(SimulateArgs),
    /// Modulation parameters of stored snapshots.
    Modulate(ModulateArgs),
    /// Green solution, direct stepping and decay of the nonlocal model.
    NonlocalCheck(NonlocalArgs),
    /// Run the acceptance suite and print a pass/fail table.
    Accept(AcceptArgs),
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub max_index: Option<usize>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub lambda0: Option<f64>,
    #[arg(long)]
    pub cfl: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Keep a snapshot every this many steps instead of every 5% of peak growth.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Domain length in units of lambda0 pi.
    #[arg(long)]
    pub extent: Option<f64>,
    #[arg(long)]
    pub stretch: Option<f64>,
    /// Relative amplitude of a random smooth perturbation (0 for none).
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ModulateArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Snapshot directory written by `simulate`.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    #[arg(long = "trap-k")]
    pub trap_k: Option<f64>,
    #[arg(long = "trap-m")]
    pub trap_m: Option<f64>,
    #[arg(long = "trap-nu")]
    pub trap_nu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NonlocalArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Datum of comparison.csv: one, cos or bump.
    #[arg(long)]
    pub datum: Option<String>,
    /// Right end of the compact set of the decay check.
    #[arg(long)]
    pub compact: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AcceptArgs {
    /// Also write acceptance.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Cap the global rayon pool from `PRANDTL_LAB_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PRANDTL_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("PRANDTL_LAB_THREADS must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    {
        // a pool set up earlier in the process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Parse `argv` (program name first) and run; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match configure_threads().and_then(|_| commands::dispatch(&cli)) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
