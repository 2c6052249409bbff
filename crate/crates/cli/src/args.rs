use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use protocc::decode::Stopping;
use protocc::spectral::Normalization;
use protocc::LiftStyle;

#[derive(Debug, Parser)]
#[command(name = "protocc", version, about = "Protograph LDPC block, tail-biting and convolutional codes")]
pub struct Cli {
    /// Worker threads (defaults to the available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Spectral shape and minimum distance growth rate of a protograph.
    Analyze(AnalyzeArgs),
    /// Free distance growth rate bound over tail-biting unwrapping factors.
    BoundCurve(BoundArgs),
    /// Lift a protograph (or its tail-biting version) to a parity-check matrix.
    Lift(LiftArgs),
    /// Cut a protograph and write tail-biting base matrices.
    Unwrap(UnwrapArgs),
    /// Exhaustive weight spectrum and minimum distance of a lifted code.
    Mindist(MindistArgs),
    /// Monte Carlo BER/FER over BPSK/AWGN.
    Simulate(SimulateArgs),
    /// Re-run a recorded manifest and compare output digests.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::BoundCurve(_) => "bound-curve",
            Command::Lift(_) => "lift",
            Command::Unwrap(_) => "unwrap",
            Command::Mindist(_) => "mindist",
            Command::Simulate(_) => "simulate",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleArg {
    Random,
    Circulant,
}

impl From<StyleArg> for LiftStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Random => LiftStyle::RandomPermutation,
            StyleArg::Circulant => LiftStyle::Circulant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormArg {
    /// Divide weights by the number of transmitted nodes.
    Transmitted,
    /// Divide weights by all variable nodes, punctured ones included.
    AllNodes,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Transmitted => Normalization::Transmitted,
            NormArg::AllNodes => Normalization::AllNodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingArg {
    Syndrome,
    Fixed,
}

impl From<StoppingArg> for Stopping {
    fn from(s: StoppingArg) -> Self {
        match s {
            StoppingArg::Syndrome => Stopping::SyndromeCheck,
            StoppingArg::Fixed => Stopping::FixedIterations,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Directory for result files and the run manifest.
    #[arg(long, default_value = "protocc-out")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Structured)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExpandArgs {
    /// Copy-and-permute the protograph M-fold before anything else.
    #[arg(long)]
    pub expand_m: Option<usize>,

    #[arg(long, default_value_t = 0)]
    pub expand_seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectralArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub delta_lo: f64,

    #[arg(long, default_value_t = 1e-3)]
    pub delta_step: f64,

    #[arg(long, default_value_t = 0.2)]
    pub delta_max: f64,

    /// Width of the final bracket around the zero crossing.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,

    /// Optimizer starts per point.
    #[arg(long, default_value_t = 32)]
    pub starts: usize,

    /// Seed of the random optimizer starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,

    #[arg(long, value_enum, default_value_t = NormArg::Transmitted)]
    pub normalization: NormArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Protograph file (JSON).
    pub protograph: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    pub expand: ExpandArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub spectral: SpectralArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoundArgs {
    pub protograph: PathBuf,

    #[arg(long, default_value_t = 8)]
    pub lambda_max: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub expand: ExpandArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub spectral: SpectralArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

/// How a base matrix becomes a binary code.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub expand: ExpandArgs,

    /// Unwrapping factor; 1 lifts the base matrix itself.
    #[arg(long, default_value_t = 1)]
    pub lambda: usize,

    /// Lift size N.
    #[arg(long, default_value_t = 1)]
    pub n: usize,

    #[arg(long, value_enum, default_value_t = StyleArg::Random)]
    pub style: StyleArg,

    #[arg(long, default_value_t = 0)]
    pub lift_seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LiftArgs {
    pub protograph: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,

    /// Directory for the alist file and the run manifest.
    #[arg(long, default_value = "protocc-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct UnwrapArgs {
    pub protograph: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    pub expand: ExpandArgs,

    /// Lift size used for the reported band parameters.
    #[arg(long, default_value_t = 1)]
    pub n: usize,

    /// Unwrapping factors to write tail-biting base matrices for.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lambda: Vec<usize>,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MindistArgs {
    /// Protograph file, or a parity-check matrix in alist format (`.alist`).
    pub input: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,

    /// Largest code dimension enumerated.
    #[arg(long, default_value_t = protocc::oracle::DEFAULT_K_LIMIT)]
    pub k_limit: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    pub protograph: PathBuf,

    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,

    /// Simulate the unterminated band with the sliding-window decoder.
    #[arg(long)]
    pub convolutional: bool,

    /// Block-columns per frame of the unterminated code.
    #[arg(long, default_value_t = 50)]
    pub segment_periods: usize,

    /// Eb/N0 points in dB.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub snr: Vec<f64>,

    #[arg(long, default_value_t = 100)]
    pub min_frame_errors: u64,

    #[arg(long, default_value_t = 10_000_000)]
    pub max_frames: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Send random codewords instead of the all-zero word.
    #[arg(long)]
    pub random_codewords: bool,

    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,

    #[arg(long, default_value_t = 25.0)]
    pub llr_clamp: f64,

    #[arg(long, value_enum, default_value_t = StoppingArg::Syndrome)]
    pub stopping: StoppingArg,

    /// Sliding window length in block-columns.
    #[arg(long, default_value_t = 6)]
    pub window_periods: usize,

    #[arg(long, default_value_t = 100)]
    pub window_iterations: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,

    /// Where to write the re-created files; defaults to the manifest directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
