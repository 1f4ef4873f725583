//! `ldtw`: command-line entry point for exact, fast and soft DTW, the learned
//! approximations, and their evaluation harnesses.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Marks an error as a usage problem (bad flags, config or inputs): exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "ldtw", version, about = "Exact, fast, soft and learned DTW toolkit")]
struct Cli {
    /// Worker threads for pairwise computations (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two signal files (CSV one value per line, or raw little-endian f32 with a .f32 extension).
    Compute(ComputeArgs),
    /// Generate a synthetic EEG-like dataset.
    GenData(GenDataArgs),
    /// Clip to the 1st/99th percentiles and min-max scale a dataset.
    Preprocess(PreprocessArgs),
    /// Slice signals, sample pairs and compute normalized exact DTW for them.
    GroundTruth(GroundTruthArgs),
    /// Train a siamese or direct-regression model.
    Train(TrainArgs),
    /// Evaluation harnesses.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Single-worker timing of metrics over signal lengths.
    Bench(BenchArgs),
    /// Learn one prototype per class through a frozen differentiable metric.
    Prototypes(PrototypesArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Nearest-neighbour retrieval agreement against a reference metric.
    Retrieval(RetrievalArgs),
    /// KNN classification macro-F1.
    Knn(KnnArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Dtw,
    Fastdtw,
    Softdtw,
    Siamese,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cost {
    Absolute,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Siamese,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthFormat {
    Csv,
    Bin,
}

#[derive(Args)]
pub struct ComputeArgs {
    pub x: PathBuf,
    pub y: PathBuf,
    #[arg(long, value_enum, default_value = "dtw")]
    pub metric: MetricName,
    /// SoftDTW smoothing.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// FastDTW search radius.
    #[arg(long, default_value_t = learned_dtw::metrics::DEFAULT_RADIUS)]
    pub radius: usize,
    #[arg(long, value_enum, default_value = "absolute")]
    pub cost: Cost,
    /// Divide DTW-family values by the longer length.
    #[arg(long)]
    pub normalize: bool,
    /// Model checkpoint (siamese and direct metrics).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Also print the warping path, one `i,j` step per line (dtw, fastdtw).
    #[arg(long)]
    pub path: bool,
}

/// Flags below `config` and `out` override keys of the same name in the
/// TOML config file.
#[derive(Args, Serialize)]
pub struct GenDataArgs {
    /// TOML config with generator keys.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output dataset directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signals_per_class: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_level: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_subjects: Option<usize>,
}

#[derive(Args)]
pub struct PreprocessArgs {
    /// Input dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Apply these statistics (a `preprocess_stats.json`) instead of
    /// computing them from the train split.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct GroundTruthArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Input (preprocessed) dataset directory.
    #[arg(long)]
    #[serde(skip)]
    pub data: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_signals: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<Cost>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<TruthFormat>,
}

#[derive(Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Training pair set (output of `ground-truth`).
    #[arg(long, requires = "val_pairs")]
    #[serde(skip)]
    pub pairs: Option<PathBuf>,
    /// Validation pair set (output of `ground-truth`).
    #[arg(long, requires = "pairs")]
    #[serde(skip)]
    pub val_pairs: Option<PathBuf>,
    /// Preprocessed dataset; pair sets are built from its train and val
    /// splits when `--pairs` is not given.
    #[arg(long, conflicts_with = "pairs", required_unless_present = "pairs")]
    #[serde(skip)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_kind: Option<Kind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_signals: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_val_signals: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_val_pairs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetrize: Option<bool>,
}

/// Signal selection shared by the evaluation commands.
#[derive(Args, Serialize)]
pub struct SelectArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitName>,
    /// Slice every signal to this length (seeded).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_len: Option<usize>,
    /// Slice to lengths drawn uniformly from `[min_len, max_len]`.
    #[arg(long, requires = "max_len")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_len: Option<usize>,
    #[arg(long, requires = "min_len")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
}

/// Metric parameters shared by the evaluation commands.
#[derive(Args, Serialize)]
pub struct MetricParamArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<Cost>,
    /// Divide DTW-family values by the longer length.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
}

#[derive(Args, Serialize)]
pub struct RetrievalArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub data: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<MetricName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_checkpoint: Option<PathBuf>,
    /// Signals per repetition.
    #[arg(long = "nt")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_t: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MetricParamArgs,
}

#[derive(Args, Serialize)]
pub struct KnnArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub data: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MetricParamArgs,
}

#[derive(Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Comma-separated metrics.
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Vec<MetricName>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub siamese_checkpoint: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct_checkpoint: Option<PathBuf>,
    /// Comma-separated signal lengths.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,
    /// Timed calls per metric and length.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MetricParamArgs,
}

#[derive(Args, Serialize)]
pub struct PrototypesArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub data: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// siamese, direct or softdtw.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Split the prototypes are fitted on.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_split: Option<SplitName>,
    /// Split the accuracy is measured on.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_split: Option<SplitName>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_members: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Keep the prototypes of the best validation epoch (default true).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keep_best: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<Cost>,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<learned_dtw::Error>() {
            if matches!(err, learned_dtw::Error::InvalidInput(_) | learned_dtw::Error::Inadmissible { .. }) {
                return 2;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let workers = match &cli.command {
        // Timings are only honest on one worker.
        Command::Bench(_) => 1,
        _ => cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if workers == 0 {
        eprintln!("error: --workers must be positive");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
        eprintln!("error: cannot configure {workers} workers: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Compute(a) => commands::compute(a),
        Command::GenData(a) => commands::gen_data(a, workers),
        Command::Preprocess(a) => commands::preprocess(a, workers),
        Command::GroundTruth(a) => commands::ground_truth(a, workers),
        Command::Train(a) => commands::train(a, workers),
        Command::Eval(EvalCommand::Retrieval(a)) => commands::retrieval(a, workers),
        Command::Eval(EvalCommand::Knn(a)) => commands::knn(a, workers),
        Command::Bench(a) => commands::bench(a, workers),
        Command::Prototypes(a) => commands::prototypes(a, workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
