//! Command-line front-end: action-gap spectra with a run cache, exponential
//! fits, boundary asymptotics and averaging-ladder demonstrations.

mod cache;
mod commands;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use billiard_spectra::billiard::Table;
use clap::{Parser, Subcommand};

use crate::records::Format;

#[derive(Parser)]
#[command(name = "billiard-spectra", version, about = "Action gaps of Birkhoff orbits in convex billiards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure Δ^(p,q) over a range of q and write one row per orbit pair.
    Spectrum(SpectrumArgs),
    /// Fit the exponential law to a spectrum file.
    Fit(FitArgs),
    /// Compare the q⁻² perimeter and area coefficients with their formulas.
    Asymptotics(AsymptoticsArgs),
    /// Raise the order of the billiard map by averaging and report each rung.
    Normalform(NormalformArgs),
}

#[derive(clap::Args)]
pub struct SpectrumArgs {
    /// Curve file (TOML or JSON).
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, default_value = "inner", value_parser = parse_table)]
    table: Table,
    #[arg(long, default_value_t = 1)]
    p: u64,
    #[arg(long)]
    q_min: u64,
    #[arg(long)]
    q_max: u64,
    /// Starting mantissa precision; small gaps escalate from here.
    #[arg(long, default_value_t = 256)]
    bits: u32,
    /// Output file; rows already present at sufficient precision are kept
    /// and only missing ones are appended. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the output extension (`.jsonl` → jsonl, otherwise csv).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Run cache; defaults to `<out>.cache.jsonl` next to the output.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Evaluate q values one after another instead of on the thread pool.
    #[arg(long)]
    serial: bool,
}

#[derive(clap::Args)]
pub struct FitArgs {
    /// Spectrum file (CSV or JSONL) written by `spectrum`.
    #[arg(long)]
    input: PathBuf,
    /// Numerator of the rotation numbers; inferred when all rows agree.
    #[arg(long)]
    p: Option<u64>,
    /// Fit against `q/|np − mq|` for the resonance `m/n`, given as `m/n`.
    #[arg(long)]
    resonance: Option<String>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct AsymptoticsArgs {
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, default_value_t = 1)]
    p: u64,
    /// Comma-separated q values in geometric progression.
    #[arg(long, default_value = "32,64,128", value_delimiter = ',')]
    q: Vec<u64>,
    #[arg(long, default_value_t = 256)]
    bits: u32,
    /// Skip the circumscribed-area coefficient.
    #[arg(long)]
    no_area: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct NormalformArgs {
    #[arg(long)]
    curve: PathBuf,
    /// Order to reach.
    #[arg(long, default_value_t = 6)]
    order: usize,
    #[arg(long, default_value_t = billiard_spectra::normal_form::DEFAULT_KMAX)]
    kmax: usize,
    #[arg(long, default_value_t = billiard_spectra::normal_form::DEFAULT_JMAX)]
    jmax: usize,
    #[arg(long, default_value_t = 256)]
    bits: u32,
    /// Radius in y for the truncation tails.
    #[arg(long, default_value_t = 0.05)]
    radius: f64,
    /// Also write a JSON report of the rungs.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_table(s: &str) -> Result<Table, String> {
    s.parse::<Table>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(args) => commands::spectrum(&args),
        Command::Fit(args) => commands::fit(&args),
        Command::Asymptotics(args) => commands::asymptotics(&args),
        Command::Normalform(args) => commands::normalform(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
