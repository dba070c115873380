//! `spiked`: sample, validate, benchmark and fit spiked Wishart spectra.

mod commands;
mod svg;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "spiked", version, about = "Spiked Wishart and pseudo-Wishart spectra from the banded sampler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw singular values and write one row per draw.
    Sample(SampleArgs),
    /// Compare the banded sampler with the dense one by two-sample KS.
    Validate(ValidateArgs),
    /// Time both samplers over a grid of sizes.
    Bench(BenchArgs),
    /// Fit spikes so mean singular values match a target.
    Fit(FitArgs),
}

#[derive(Args, Clone)]
pub struct SpecArgs {
    /// Rows of G (variables).
    #[arg(long)]
    pub m: usize,
    /// Columns of G (observations).
    #[arg(long)]
    pub n: usize,
    /// Spike standard deviations, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub spikes: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Efficient,
    Dense,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub draws: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep only the largest `top` singular values (default: all of them).
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long, value_enum, default_value = "efficient")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-value means as a one-column CSV, usable as a fit target.
    #[arg(long)]
    pub means_out: Option<PathBuf>,
    /// Directory for SVG histograms of the values listed in `--hist`.
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
    /// 1-based indices of the singular values to histogram.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub hist: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Write the first banded draw as `i j value kind` triplets.
    #[arg(long)]
    pub dump_h: Option<PathBuf>,
    /// Write the first banded draw as a dense CSV.
    #[arg(long)]
    pub dump_h_dense: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "10,3")]
    pub spikes: Vec<f64>,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub draws: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest acceptable KS p-value.
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Directory for overlaid histograms of both samplers.
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
    /// Corrupt the banded sampler's chi degrees of freedom (testing aid).
    #[arg(long, hide = true, default_value_t = 0, allow_negative_numbers = true)]
    pub df_shift: i64,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Values of m, comma separated.
    #[arg(long = "m", value_delimiter = ',', required = true)]
    pub m_grid: Vec<usize>,
    /// Columns of G; ignored with `--coupled`.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Use n = m for every grid point.
    #[arg(long)]
    pub coupled: bool,
    #[arg(long, value_delimiter = ',', required = true)]
    pub spikes: Vec<f64>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub draws: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Efficient method computes only the top values, iteratively.
    #[arg(long)]
    pub top: Option<usize>,
    /// Timed repetitions; the median is reported.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "efficient,dense")]
    pub methods: Vec<Method>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Log-log plot of time against m.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitArgs {
    /// CSV of descending target singular values.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    /// Initial spikes; their count fixes k.
    #[arg(long, value_delimiter = ',', required = true)]
    pub init: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub batch: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Redraw the noise batch at every evaluation.
    #[arg(long)]
    pub fresh_noise: bool,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Target against fitted means.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input files: exit code 2.
    Usage(String),
    /// Numerical or I/O failure: exit code 1.
    Failure(String),
}

impl CliError {
    pub fn io(e: impl std::fmt::Display) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<spiked_core::Error> for CliError {
    fn from(e: spiked_core::Error) -> Self {
        match e {
            spiked_core::Error::Domain(msg) => CliError::Usage(msg),
            other => CliError::Failure(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(a) => commands::sample(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Fit(a) => commands::fit(&a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
