//! Command-line surface.
//!
//! Input files are comma-separated with a header row; the last column is the
//! target and every other column a feature.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "bcreg",
    version,
    about = "Ridge regression, kernel networks and their bias-corrected variants on streaming data",
    after_help = "CSV input: header row, decimal numbers, last column is the target.\n\
                  Every randomized command uses --seed (default 0); output is byte-identical for a given seed."
)]
pub struct Cli {
    /// Worker threads for repetitions (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Fit one model on a CSV file or a synthetic sample.
    Fit(FitArgs),
    /// Monte-Carlo bias, variance and mse of the weights on a synthetic model.
    BiasVariance(BiasVarianceArgs),
    /// Incremental ridge / corrected ridge on block-wise streaming data.
    Stream(StreamArgs),
    /// Incremental kernel network / corrected kernel network on streaming data.
    KernelStream(KernelStreamArgs),
    /// Randomly slice a CSV file into equal-size chunk files.
    Chunks(ChunksArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Linear,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKindArg {
    Gaussian,
    Linear,
    Polynomial,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Result file (default: standard output).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CvArgs {
    /// λ grid for cross validation as `lo,hi,count` (log-spaced).
    #[arg(long, value_delimiter = ',', default_values_t = [1e-6, 1e2, 25.0])]
    pub grid: Vec<f64>,

    #[arg(long, default_value_t = 10)]
    pub folds: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelArgs {
    #[arg(long = "kernel", value_enum, default_value_t = KernelKindArg::Gaussian)]
    pub kind: KernelKindArg,

    /// Gaussian bandwidth: `median` (median pairwise distance per block) or a number.
    #[arg(long, default_value = "median")]
    pub bandwidth: String,

    /// Polynomial degree.
    #[arg(long, default_value_t = 2)]
    pub degree: u32,

    /// Polynomial offset.
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Training CSV. Without it a synthetic sample is drawn from --model.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Optional test CSV for held-out metrics.
    #[arg(long)]
    pub test: Option<PathBuf>,

    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2), required_unless_present = "input")]
    pub model: Option<u32>,

    /// Synthetic sample size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,

    #[arg(long, value_enum, default_value_t = FamilyArg::Linear)]
    pub family: FamilyArg,

    /// Regularization parameter; selected by cross validation when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Correction order (0 = uncorrected).
    #[arg(long, default_value_t = 1)]
    pub order: u32,

    #[arg(long)]
    pub classification: bool,

    #[command(flatten)]
    pub cv: CvArgs,

    #[command(flatten)]
    pub kernel: KernelArgs,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BiasVarianceArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    pub model: u32,

    /// One or more λ values (comma separated).
    #[arg(long, value_delimiter = ',', required_unless_present = "lambda_grid")]
    pub lambda: Vec<f64>,

    /// Log-spaced λ sweep `lo,hi,count` instead of --lambda.
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda")]
    pub lambda_grid: Option<Vec<f64>>,

    /// Correction orders (comma separated).
    #[arg(long, alias = "orders", value_delimiter = ',', default_values_t = [0u32, 1])]
    pub order: Vec<u32>,

    #[arg(long, default_value_t = 100)]
    pub n: usize,

    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StreamArgs {
    /// Synthetic model (1 or 2). Ignored with --input.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2), required_unless_present = "input")]
    pub model: Option<u32>,

    /// CSV data for the chunked real-data protocol.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Separate test CSV for --input; otherwise one chunk per run is held out.
    #[arg(long, requires = "input")]
    pub test: Option<PathBuf>,

    /// Number of chunks --input is sliced into.
    #[arg(long, default_value_t = 20)]
    pub chunks: usize,

    #[arg(long, default_value_t = 20)]
    pub blocks: usize,

    #[arg(long, default_value_t = 100)]
    pub block_size: usize,

    /// Synthetic test-set size per repetition.
    #[arg(long, default_value_t = 1000)]
    pub test_size: usize,

    /// Correction orders to compare (comma separated).
    #[arg(long, alias = "order", value_delimiter = ',', default_values_t = [0u32, 1])]
    pub orders: Vec<u32>,

    /// Repetitions (runs with --input). Default 100, or 20 with --input.
    #[arg(long)]
    pub reps: Option<usize>,

    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,

    /// Use a fixed λ on every block instead of cross validation.
    #[arg(long)]
    pub lambda: Option<f64>,

    #[command(flatten)]
    pub cv: CvArgs,

    /// Also report sign-threshold classification error (targets are ±1).
    #[arg(long)]
    pub classification: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelStreamArgs {
    /// CSV data; without it the synthetic sine task is used.
    #[arg(long)]
    pub input: Option<PathBuf>,

    #[arg(long, requires = "input")]
    pub test: Option<PathBuf>,

    #[arg(long, default_value_t = 50)]
    pub chunks: usize,

    #[arg(long, default_value_t = 50)]
    pub blocks: usize,

    #[arg(long, default_value_t = 50)]
    pub block_size: usize,

    #[arg(long, default_value_t = 500)]
    pub test_size: usize,

    /// Correction orders to compare (0 and/or 1).
    #[arg(long, alias = "order", value_delimiter = ',', default_values_t = [0u32, 1])]
    pub orders: Vec<u32>,

    /// Repetitions (runs with --input).
    #[arg(long, default_value_t = 20)]
    pub reps: usize,

    #[arg(long, default_value_t = 10.0)]
    pub snr: f64,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[command(flatten)]
    pub cv: CvArgs,

    #[command(flatten)]
    pub kernel: KernelArgs,

    #[arg(long)]
    pub classification: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChunksArgs {
    #[arg(long)]
    pub input: PathBuf,

    /// Number of chunks.
    #[arg(long, default_value_t = 20)]
    pub m: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Directory receiving `chunk_000.csv`, ... and `manifest.json`.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

impl Command {
    pub fn seed(&self) -> u64 {
        match self {
            Command::Fit(a) => a.seed,
            Command::BiasVariance(a) => a.seed,
            Command::Stream(a) => a.seed,
            Command::KernelStream(a) => a.seed,
            Command::Chunks(a) => a.seed,
        }
    }
}
