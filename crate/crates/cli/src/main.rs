//! `specscope`: synthesize corpora, extract spectral features, train and
//! evaluate detectors, plot profile statistics and check the spectral loss.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use specscope::classify::Scaling;
use specscope::ingest::Layout;
use specscope::synth::FakeMode;

/// Invalid flag combination or value detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(
    name = "specscope",
    version,
    about = "Spectral fingerprints of up-sampled images"
)]
struct Cli {
    /// Worker threads for feature extraction (default: SPECSCOPE_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus of power-law images and up-sampled fakes.
    Synth(SynthArgs),
    /// Extract azimuthal-profile features from a dataset into a CSV cache.
    Extract(ExtractArgs),
    /// Train a supervised detector on a feature cache.
    Train(TrainArgs),
    /// Evaluate a trained model on a feature cache.
    Eval(EvalArgs),
    /// Cluster a feature cache into two groups with k-means.
    Cluster(ClusterArgs),
    /// Per-class mean and variance of the profiles, as CSV and SVG.
    Stats(StatsArgs),
    /// Profiles of an image before and after each up-sampling unit.
    UpsampleAnalyze(UpsampleArgs),
    /// Spectral loss value and a finite-difference check of its gradient.
    LossCheck(LossCheckArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Transconv,
    Upconv,
}

impl From<ModeArg> for FakeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Transconv => FakeMode::TransConv,
            ModeArg::Upconv => FakeMode::UpConv,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    /// `manifest.csv` when present, otherwise labeled directories.
    Auto,
    LabeledDirs,
    Manifest,
}

impl LayoutArg {
    pub fn resolve(self, root: &std::path::Path) -> Layout {
        match self {
            LayoutArg::LabeledDirs => Layout::LabeledDirs,
            LayoutArg::Manifest => Layout::Manifest,
            LayoutArg::Auto if root.join(specscope::ingest::MANIFEST_NAME).is_file() => {
                Layout::Manifest
            }
            LayoutArg::Auto => Layout::LabeledDirs,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    None,
    Log,
    Standardize,
    LogStandardize,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::None => Scaling::None,
            ScalingArg::Log => Scaling::Log,
            ScalingArg::Standardize => Scaling::Standardize,
            ScalingArg::LogStandardize => Scaling::LogStandardize,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Svm,
    Logreg,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n_real: usize,
    #[arg(long, default_value_t = 200)]
    pub n_fake: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Transconv)]
    pub mode: ModeArg,
    /// Power falls off as |w|^-exponent.
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub exponent: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Images per group id (0: no groups).
    #[arg(long, default_value_t = 0)]
    pub group_size: usize,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = LayoutArg::Auto)]
    pub layout: LayoutArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub target_len: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Svm)]
    pub model: ModelArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Keep all rows of a group on the same side of the split.
    #[arg(long)]
    pub group_aware: bool,
    #[arg(long, value_enum)]
    pub scaling: Option<ScalingArg>,
    /// SVM regularization constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Training epochs (default: 200 for svm, 500 for logreg).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Logistic-regression L2 penalty.
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Logistic-regression step size.
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Evaluate every row instead of the held-out split recorded in the model.
    #[arg(long)]
    pub all: bool,
    /// Also report accuracy after a majority vote within each group.
    #[arg(long)]
    pub vote_by_group: bool,
    /// Write the report as `metric,value` CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Write per-sample predictions as CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long)]
    pub cache: PathBuf,
    /// Save the fitted model.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub n_init: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = ScalingArg::Log)]
    pub scaling: ScalingArg,
    /// Fix the cluster labels with this many labeled rows (seeded pick).
    #[arg(long, default_value_t = 0)]
    pub calibrate: usize,
    #[arg(long)]
    pub vote_by_group: bool,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub out_csv: PathBuf,
    #[arg(long)]
    pub out_svg: PathBuf,
    /// Half-width of the shaded band around each mean curve.
    #[arg(long, value_enum, default_value_t = BandArg::Std)]
    pub band: BandArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BandArg {
    Std,
    Variance,
}

#[derive(Args, Debug)]
pub struct UpsampleArgs {
    /// Analyze this image.
    #[arg(long, conflicts_with = "size")]
    pub image: Option<PathBuf>,
    /// Analyze a synthetic power-law image of this size.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub exponent: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LossCheckArgs {
    /// Feature cache whose label-0 rows define the reference profile.
    #[arg(long)]
    pub real_cache: PathBuf,
    /// Check this image instead of random ones.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n_random: usize,
    #[arg(long, default_value_t = 8)]
    pub size: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    /// Weight of the spectral term against a zero generator loss.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<usize> {
    if let Some(n) = flag {
        return if n == 0 {
            Err(usage("--threads must be at least 1"))
        } else {
            Ok(n)
        };
    }
    match std::env::var("SPECSCOPE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage(format!(
                "SPECSCOPE_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = thread_count(cli.threads)?;
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Extract(a) => commands::extract(a, threads),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Stats(a) => commands::stats(a),
        Command::UpsampleAnalyze(a) => commands::upsample_analyze(a),
        Command::LossCheck(a) => commands::loss_check(a),
    }
}

fn is_usage(err: &anyhow::Error) -> bool {
    err.chain().any(|e| e.is::<UsageError>())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
