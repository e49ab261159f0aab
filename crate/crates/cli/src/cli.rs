//! Command-line grammar. Each subcommand maps to exactly one pipeline.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::formats::EmbeddingFormat;

#[derive(Debug, Parser)]
#[command(
    name = "embfuse",
    version,
    about = "Align, fuse and evaluate ensembles of word embeddings trained with different seeds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse two or more embedding sets into one denoised embedding by
    /// aligning them into a shared space before averaging
    Fuse(FuseArgs),
    /// Average embedding sets per word with no alignment (the weak baseline)
    Average(AverageArgs),
    /// Pairwise-alignment stability reports, optionally binned by corpus
    /// frequency
    Stability(StabilityArgs),
    /// Score an embedding on similarity and analogy benchmark files
    Eval(EvalArgs),
    /// Generate ground-truth synthetic ensembles and run the oracle
    /// assertion suite
    SynthCheck(SynthCheckArgs),
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Input embedding files (all sharing one dimension)
    #[arg(required = true, num_args = 2..)]
    pub inputs: Vec<PathBuf>,

    /// Fused embedding output file
    #[arg(short, long)]
    pub output: PathBuf,

    /// Input/output text layout
    #[arg(long, value_enum, default_value = "header")]
    pub format: EmbeddingFormat,

    /// Skip centering+unit-normalization of the inputs
    #[arg(long)]
    pub no_prenorm: bool,

    /// Skip centering+unit-normalization of the fused output
    #[arg(long)]
    pub no_postnorm: bool,

    /// Sweep cap for the iterative alignment
    #[arg(long, default_value_t = 300)]
    pub max_sweeps: usize,

    /// Relative score-decrease convergence tolerance
    #[arg(long, default_value_t = 1e-7)]
    pub tolerance: f64,

    /// Significant digits for written vectors (default: exact round-trip)
    #[arg(long)]
    pub precision: Option<u32>,

    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct AverageArgs {
    /// Input embedding files (all sharing one dimension)
    #[arg(required = true, num_args = 2..)]
    pub inputs: Vec<PathBuf>,

    /// Averaged embedding output file
    #[arg(short, long)]
    pub output: PathBuf,

    #[arg(long, value_enum, default_value = "header")]
    pub format: EmbeddingFormat,

    /// Skip centering+unit-normalization of the inputs
    #[arg(long)]
    pub no_prenorm: bool,

    /// Skip centering+unit-normalization of the averaged output
    #[arg(long)]
    pub no_postnorm: bool,

    /// Significant digits for written vectors (default: exact round-trip)
    #[arg(long)]
    pub precision: Option<u32>,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Raw embedding instances (two or more)
    #[arg(required = true, num_args = 2..)]
    pub inputs: Vec<PathBuf>,

    /// Fused/denoised instances to score alongside the raw ones
    #[arg(long, num_args = 1..)]
    pub fused: Vec<PathBuf>,

    /// Prefix for the emitted reports (JSON/TSV)
    #[arg(short, long)]
    pub output: PathBuf,

    #[arg(long, value_enum, default_value = "header")]
    pub format: EmbeddingFormat,

    /// Random instance pairs to score
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,

    /// Pair-sampling seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// `token<TAB>count` table; enables the frequency-binned curve
    #[arg(long)]
    pub freq_table: Option<PathBuf>,

    /// Count-bin width for the curve
    #[arg(long, default_value_t = 50)]
    pub bin_width: u64,

    /// Compare raw vectors, skipping centering+unit-normalization
    #[arg(long)]
    pub raw: bool,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Embedding file to score
    pub embedding: PathBuf,

    #[arg(long, value_enum, default_value = "header")]
    pub format: EmbeddingFormat,

    /// Benchmark as type:path, type one of: similarity, analogy (repeatable)
    #[arg(long = "dataset", required = true, value_name = "TYPE:PATH")]
    pub datasets: Vec<String>,

    /// Retry lookups lowercased for words missing as-is
    #[arg(long)]
    pub lowercase_fallback: bool,

    /// TSV output file (the table always goes to stdout too)
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct SynthCheckArgs {
    /// Vocabulary size
    #[arg(long, default_value_t = 2000)]
    pub n: usize,

    /// Embedding dimension
    #[arg(long, default_value_t = 20)]
    pub d: usize,

    /// Number of sets (must be at least 2)
    #[arg(long, default_value_t = 10)]
    pub k: usize,

    /// Per-coordinate noise standard deviation
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Power-law exponent for synthetic corpus counts; enables the
    /// frequency-curve checks
    #[arg(long)]
    pub freq_exponent: Option<f64>,

    /// Write the JSON verdict here as well as to stdout
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}
