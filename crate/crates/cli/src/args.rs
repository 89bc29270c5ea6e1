use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "topohash", version, about = "Binary hash codes for persistence diagrams")]
pub struct Cli {
    /// Worker threads for parallel sections (outputs do not depend on it).
    #[arg(long, global = true, env = "TOPOHASH_THREADS")]
    pub threads: Option<usize>,

    /// Root seed; every stage derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic diagrams and a manifest.
    Gen(GenArgs),
    /// Train a hash model on a manifest of diagrams.
    Train(TrainArgs),
    /// Hash every diagram of a manifest.
    Hash(HashArgs),
    /// All-pairs distance matrix.
    Distmat(DistmatArgs),
    /// Single-linkage clustering of a distance matrix.
    Cluster(ClusterArgs),
    /// Fowlkes–Mallows score between two label files.
    Evaluate(EvaluateArgs),
    /// Pairwise distances from two matrices as `dA,dB` rows.
    Scatter(ScatterArgs),
    /// Train on uniform diagrams and score Hamming clustering of planted
    /// clusters against their W1 clustering.
    Protocol(ProtocolArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of diagrams (per cluster with `--planted`).
    pub count: usize,
    /// Points per diagram.
    pub points: usize,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Two labelled Gaussian clusters instead of uniform diagrams.
    #[arg(long)]
    pub planted: bool,
    #[arg(long, value_enum, default_value_t = FileFormat::Csv)]
    pub format: FileFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Similarity {
    Binary,
    Real,
    S1,
    S2,
    S3,
    S4,
    S5,
}

#[derive(Debug, Clone, Args)]
pub struct Widths {
    /// Encoder conv block widths.
    #[arg(long, value_delimiter = ',', default_values_t = [16, 32, 64, 128])]
    pub encoder_widths: Vec<usize>,
    /// Generator widths after the first three transposed convolutions.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 32, 16])]
    pub generator_widths: Vec<usize>,
    /// Discriminator conv block widths.
    #[arg(long, value_delimiter = ',', default_values_t = [16, 32, 32])]
    pub discriminator_widths: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainingFlags {
    #[arg(long, default_value_t = 64)]
    pub bits: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.1)]
    pub omega1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub omega2: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[command(flatten)]
    pub widths: Widths,
}

#[derive(Debug, Clone, Args)]
pub struct SinkhornFlags {
    /// Entropic regularization; defaults to 0.1 / mean points per diagram.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Stop once the L1 marginal violation falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub sinkhorn_tolerance: f64,
    #[arg(long, default_value_t = 2000)]
    pub sinkhorn_iterations: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub manifest: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long, value_enum, default_value_t = Similarity::Binary)]
    pub similarity: Similarity,
    #[command(flatten)]
    pub sinkhorn: SinkhornFlags,
    #[arg(long, default_value_t = 50)]
    pub resolution: usize,
    /// Also write per-epoch losses as CSV.
    #[arg(long)]
    pub losses: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HashArgs {
    #[arg(long)]
    pub model: PathBuf,
    pub manifest: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    W1,
    Hw,
    Hamming,
    #[value(name = "l2-pi")]
    L2Pi,
    #[value(name = "l2-bc")]
    L2Bc,
}

#[derive(Debug, Args)]
pub struct DistmatArgs {
    /// Manifest of diagrams, or a codes file for `--metric hamming`.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Output path; a `.bin` extension selects the binary format.
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub resolution: usize,
    #[command(flatten)]
    pub sinkhorn: SinkhornFlags,
    /// Code length of a codes file; defaults to four bits per hex digit.
    #[arg(long)]
    pub bits: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    pub matrix: PathBuf,
    #[arg(long, conflicts_with = "k_range", required_unless_present = "k_range")]
    pub k: Option<usize>,
    /// Choose k by the elbow rule over `a..b` (inclusive).
    #[arg(long, value_parser = parse_range)]
    pub k_range: Option<RangeInclusive<usize>>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub labels_a: PathBuf,
    pub labels_b: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    pub matrix_a: PathBuf,
    pub matrix_b: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = 1000)]
    pub training_count: usize,
    #[arg(long, default_value_t = 100)]
    pub per_cluster: usize,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub seeds: Vec<u64>,
    /// Code lengths for the bit-length study.
    #[arg(long, value_delimiter = ',', default_values_t = [24, 64])]
    pub bits_list: Vec<usize>,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[command(flatten)]
    pub sinkhorn: SinkhornFlags,
    #[arg(long, default_value_t = 50)]
    pub resolution: usize,
    /// Write the results table here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected `a..b`, got `{s}`"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b: usize = b.trim().trim_start_matches('=').parse().map_err(|e| format!("`{b}`: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok(a..=b)
}
