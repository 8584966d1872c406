//! `irsmap`: build channel power gain maps for an AP + IRS indoor scene,
//! plan gain-constrained robot paths over them, run parameter sweeps, and
//! validate the closed-form gain against Monte Carlo sampling.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 infeasible plan,
//! 4 I/O error, 5 validation failure.

mod cache;
mod commands;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irsmap_core::{Error, MapMode};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_VALIDATION: u8 = 5;

#[derive(Parser)]
#[command(name = "irsmap", version, about = "IRS radio maps and gain-constrained path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a channel power gain map and write it as CSV (optionally a PGM heatmap).
    Map(MapArgs),
    /// Plan the minimum-distance path subject to an expected-gain threshold.
    Plan(PlanArgs),
    /// Sweep the gain threshold or the IRS element count and tabulate distances.
    Sweep(SweepArgs),
    /// Compare the closed-form expected gain against Monte Carlo sampling.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Override the total IRS element count (panel grows along z).
    #[arg(long)]
    elements: Option<usize>,
    /// Directory for cached maps (also via IRSMAP_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Map mode: no_irs, continuous, or discrete<levels>.
    #[arg(long, default_value = "continuous")]
    mode: MapMode,
    /// Output CSV path.
    #[arg(long, default_value = "map.csv")]
    out: PathBuf,
    /// Also write a grayscale heatmap (PGM).
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Also write the thresholded feasible map (CSV of 0/1 flags).
    #[arg(long)]
    feasible: Option<PathBuf>,
    /// Threshold in dB for --feasible; defaults to the scenario's min_gain_db.
    #[arg(long, allow_hyphen_values = true)]
    min_gain: Option<f64>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Map mode: no_irs, continuous, or discrete<levels>.
    #[arg(long, default_value = "continuous")]
    mode: MapMode,
    /// Expected-gain threshold in dB (accepts -inf); defaults to the
    /// scenario's min_gain_db.
    #[arg(long, allow_hyphen_values = true)]
    min_gain: Option<f64>,
    /// Reuse a previously exported map CSV instead of building one.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Forbid diagonal steps that cut the corner of an infeasible cell.
    #[arg(long)]
    strict_adjacency: bool,
    /// Output path CSV.
    #[arg(long, default_value = "path.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Swept variable: gamma (threshold in dB) or elements (total count).
    #[arg(long)]
    variable: sweep::SweepVariable,
    /// Comma-separated values, or an inclusive range start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
    /// Comma-separated modes (default: no_irs,discrete2,discrete4,discrete8,continuous).
    #[arg(long)]
    modes: Option<String>,
    /// Threshold in dB for element sweeps; defaults to the scenario's min_gain_db.
    #[arg(long, allow_hyphen_values = true)]
    min_gain: Option<f64>,
    /// Forbid diagonal steps that cut the corner of an infeasible cell.
    #[arg(long)]
    strict_adjacency: bool,
    /// Output CSV path.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Monte Carlo samples per probe cell (minimum 10000).
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Map(args) => commands::run_map(args),
        Command::Plan(args) => commands::run_plan(args),
        Command::Sweep(args) => commands::run_sweep(args),
        Command::Validate(args) => commands::run_validate(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}
