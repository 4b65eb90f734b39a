use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "reapkit", version, about = "Sparse kernels, bundle streams and accelerator simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert between Matrix Market and bundle stream files.
    Convert(ConvertArgs),
    /// Multiply two matrices (the second defaults to the first).
    Spgemm(SpgemmArgs),
    /// Factor a symmetric positive definite matrix.
    Cholesky(CholeskyArgs),
    /// Simulate the accelerator on one matrix.
    Simulate(SimulateArgs),
    /// Run the simulator over a range of one parameter.
    Sweep(SweepArgs),
    /// Generate a random sparse matrix.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    Csr,
    Csc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Spgemm,
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrepArg {
    /// Host time derived from the element count.
    Modeled,
    /// Host time measured with the wall clock (not reproducible).
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vary {
    Pipelines,
    Bandwidth,
    Density,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// `.mtx` or `.rir` input.
    pub input: PathBuf,
    /// `.rir` or `.mtx` output.
    pub output: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub capacity: usize,
    #[arg(long, value_enum, default_value_t = Layout::Csr)]
    pub layout: Layout,
}

#[derive(Debug, Args)]
pub struct SpgemmArgs {
    pub a: PathBuf,
    pub b: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub capacity: usize,
    /// Compare against the reference product and, up to n = 4096, the dense
    /// product.
    #[arg(long)]
    pub verify: bool,
    /// Write C as Matrix Market.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a JSON report.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Include wall-clock phase timings.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct CholeskyArgs {
    pub a: PathBuf,
    /// Symmetrize and make diagonally dominant before factoring.
    #[arg(long)]
    pub make_spd: bool,
    #[arg(long)]
    pub verify: bool,
    /// Write L as Matrix Market.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print elimination tree, symbolic and numeric times separately.
    #[arg(long)]
    pub timings: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Accelerator parameters; a preset fills them and explicit flags override.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub pipelines: Option<usize>,
    #[arg(long)]
    pub freq_mhz: Option<f64>,
    #[arg(long)]
    pub capacity: Option<usize>,
    #[arg(long)]
    pub cam_size: Option<usize>,
    #[arg(long)]
    pub read_bw: Option<f64>,
    #[arg(long)]
    pub write_bw: Option<f64>,
    #[arg(long)]
    pub multipliers: Option<usize>,
    #[arg(long)]
    pub sort_capacity: Option<usize>,
    #[arg(long)]
    pub buffer_depth: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub a: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelArg::Spgemm)]
    pub kernel: KernelArg,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Apply the SPD transform before a Cholesky simulation.
    #[arg(long)]
    pub make_spd: bool,
    #[arg(long, value_enum, default_value_t = PrepArg::Modeled)]
    pub prep: PrepArg,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Input matrix; density sweeps generate their own.
    pub a: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KernelArg::Spgemm)]
    pub kernel: KernelArg,
    #[arg(long, value_enum)]
    pub vary: Vary,
    /// Comma-separated values of the varied parameter.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Matrix size for density sweeps.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub make_spd: bool,
    /// Worker threads (default: `REAPKIT_THREADS` or all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    /// Defaults to `--rows`.
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub spd: bool,
    pub out: PathBuf,
}
