use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use learned_dtw::data::{
    build_pair_set, import_csv_signal, rng_from_seed, sample_lengths, slice_fixed, synth_gen, Dataset, DatasetEntry,
    PreprocessStats, Split, SynthConfig,
};
use learned_dtw::eval::{
    knn_macro_f1, nn_retrieval_agreement, timing_bench, train_prototypes, ClassifReport, DifferentiableMetric,
    MetricHandle, MetricSpec, PairMetric, PrototypeConfig, RetrievalReport,
};
use learned_dtw::metrics::{dtw, fast_dtw, CostKind, PairGroundTruth, DEFAULT_RADIUS};
use learned_dtw::par::Exec;
use learned_dtw::train::{TrainConfig, TrainData};
use learned_dtw::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::config::resolve;
use crate::run::{RunManifest, Staging};
use crate::{
    BenchArgs, ComputeArgs, Cost, GenDataArgs, GroundTruthArgs, KnnArgs, MetricName, PreprocessArgs,
    PrototypesArgs, RetrievalArgs, SplitName, TrainArgs, TruthFormat, UsageError,
};

const STATS_FILE: &str = "preprocess_stats.json";
const TRUTH_CSV: &str = "ground_truth.csv";
const TRUTH_BIN: &str = "ground_truth.bin";

impl From<Cost> for CostKind {
    fn from(c: Cost) -> Self {
        match c {
            Cost::Absolute => CostKind::Absolute,
            Cost::Squared => CostKind::Squared,
        }
    }
}

fn manifest(subcommand: &str, config: &impl Serialize, seed: Option<u64>, inputs: &[&Path], workers: usize) -> Result<RunManifest> {
    Ok(RunManifest {
        subcommand: subcommand.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(config)?,
        seed,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: Default::default(),
        workers,
        wall_time_secs: 0.0,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    learned_dtw::io::write_bytes_atomic(path, text.as_bytes())?;
    Ok(())
}

fn write_csv_rows<const N: usize>(path: &Path, header: [&str; N], rows: &[[String; N]]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    learned_dtw::io::write_bytes_atomic(path, text.as_bytes())?;
    Ok(())
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    if !dir.join("manifest.json").is_file() {
        bail!(UsageError(format!("{} is not a dataset directory (no manifest.json)", dir.display())));
    }
    Dataset::load(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn select(ds: &Dataset, split: SplitName) -> Vec<TimeSeries> {
    match split {
        SplitName::Train => ds.split(Split::Train),
        SplitName::Val => ds.split(Split::Val),
        SplitName::Test => ds.split(Split::Test),
        SplitName::All => ds.signals(),
    }
}

fn read_signal(path: &Path) -> Result<TimeSeries> {
    let is_raw = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("f32"));
    let series = if is_raw {
        let bytes = fs::read(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
        if bytes.len() % 4 != 0 {
            bail!(UsageError(format!("{}: length is not a multiple of 4 bytes", path.display())));
        }
        let values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        TimeSeries::new(path.display().to_string(), values)
    } else {
        import_csv_signal(path)
    };
    series.map_err(|e| UsageError(format!("cannot read signal {}: {e}", path.display())).into())
}

/// Builds a metric; model metrics need a checkpoint of the matching kind.
fn build_metric(
    name: MetricName,
    checkpoint: Option<&Path>,
    gamma: f64,
    radius: usize,
    cost: Cost,
    normalize: bool,
) -> Result<MetricHandle> {
    let cost = CostKind::from(cost);
    let spec = match name {
        MetricName::Dtw => MetricSpec::ExactDtw { cost, normalize },
        MetricName::Fastdtw => MetricSpec::FastDtw { radius, cost, normalize },
        MetricName::Softdtw => MetricSpec::SoftDtw { gamma, cost, normalize },
        MetricName::Siamese | MetricName::Direct => {
            let path = checkpoint.ok_or_else(|| UsageError(format!("metric {name:?} needs a checkpoint")))?;
            if !path.is_file() {
                bail!(UsageError(format!("checkpoint {} does not exist", path.display())));
            }
            let path = path.display().to_string();
            if name == MetricName::Siamese {
                MetricSpec::ModelSiamese { checkpoint: path }
            } else {
                MetricSpec::ModelDirect { checkpoint: path }
            }
        }
    };
    Ok(MetricHandle::from_spec(&spec)?)
}

// ---------------------------------------------------------------------------

pub fn compute(a: ComputeArgs) -> Result<()> {
    let x = read_signal(&a.x)?;
    let y = read_signal(&a.y)?;
    if a.path && !matches!(a.metric, MetricName::Dtw | MetricName::Fastdtw) {
        bail!(UsageError("--path is only available for dtw and fastdtw".into()));
    }
    let metric = build_metric(a.metric, a.checkpoint.as_deref(), a.gamma, a.radius, a.cost, a.normalize)?;
    let value = metric.distance(x.values(), y.values())?;
    println!("{value:.6}");
    if a.path {
        let result = match a.metric {
            MetricName::Dtw => dtw(x.values(), y.values(), a.cost.into())?,
            _ => fast_dtw(x.values(), y.values(), a.radius, a.cost.into())?,
        };
        for &(i, j) in result.path.steps() {
            println!("{i},{j}");
        }
    }
    Ok(())
}

pub fn gen_data(a: GenDataArgs, workers: usize) -> Result<()> {
    let cfg: SynthConfig = resolve(a.config.as_deref(), &a)?;
    let staging = Staging::new(&a.out)?;
    let ds = synth_gen(&cfg)?;
    ds.save(&staging.path(""))?;
    log::info!("generated {} signals", ds.len());
    let inputs: Vec<&Path> = a.config.iter().map(|p| p.as_path()).collect();
    staging.commit(manifest("gen-data", &cfg, Some(cfg.seed), &inputs, workers)?)
}

pub fn preprocess(a: PreprocessArgs, workers: usize) -> Result<()> {
    let mut ds = load_dataset(&a.data)?;
    let staging = Staging::new(&a.out)?;
    let stats = match &a.stats {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| UsageError(format!("cannot read {}: {e}", p.display())))?;
            let stats: PreprocessStats = serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
            ds.apply_preprocessing(&stats)?;
            stats
        }
        None => ds.preprocess()?,
    };
    ds.save(&staging.path(""))?;
    write_json(&staging.path(STATS_FILE), &stats)?;
    let mut inputs = vec![a.data.as_path()];
    inputs.extend(a.stats.as_deref());
    staging.commit(manifest("preprocess", &stats, None, &inputs, workers)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GroundTruthConfig {
    split: SplitName,
    n_signals: usize,
    slice_len: usize,
    n_pairs: usize,
    seed: u64,
    cost: Cost,
    format: TruthFormat,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self {
            split: SplitName::Train,
            n_signals: 500,
            slice_len: 256,
            n_pairs: 20_000,
            seed: 0,
            cost: Cost::Absolute,
            format: TruthFormat::Csv,
        }
    }
}

/// Saves sliced signals as a dataset plus their ground truth. Slices keep the
/// subject and split of the signal they were cut from.
fn save_pair_set(dir: &Path, source: &Dataset, signals: &[TimeSeries], truth: &PairGroundTruth, format: TruthFormat) -> Result<()> {
    let origin: HashMap<&str, (u32, Split)> = source
        .entries
        .iter()
        .map(|e| (e.series.id.as_str(), (e.subject, e.split)))
        .collect();
    let entries = signals
        .iter()
        .map(|s| {
            let (subject, split) = origin.get(s.id.as_str()).copied().unwrap_or((0, Split::Train));
            DatasetEntry {
                series: s.clone(),
                subject,
                split,
            }
        })
        .collect();
    let ds = Dataset {
        entries,
        provenance: format!("pair set sliced from: {}", source.provenance),
    };
    ds.save(dir)?;
    let name = match format {
        TruthFormat::Csv => TRUTH_CSV,
        TruthFormat::Bin => TRUTH_BIN,
    };
    truth.save(&dir.join(name))?;
    Ok(())
}

fn load_pair_set(dir: &Path) -> Result<(Vec<TimeSeries>, PairGroundTruth)> {
    let ds = load_dataset(dir)?;
    let truth_path = [TRUTH_CSV, TRUTH_BIN]
        .iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
        .ok_or_else(|| UsageError(format!("{} holds no ground truth", dir.display())))?;
    let truth = PairGroundTruth::load(&truth_path)?;
    Ok((ds.signals(), truth))
}

pub fn ground_truth(a: GroundTruthArgs, workers: usize) -> Result<()> {
    let cfg: GroundTruthConfig = resolve(a.config.as_deref(), &a)?;
    let ds = load_dataset(&a.data)?;
    let staging = Staging::new(&a.out)?;
    let pool = select(&ds, cfg.split);
    let set = build_pair_set(&pool, cfg.n_signals, cfg.slice_len, cfg.n_pairs, cfg.seed, cfg.cost.into(), Exec::Auto)?;
    save_pair_set(&staging.path(""), &ds, &set.signals, &set.truth, cfg.format)?;
    log::info!("{} pairs over {} slices", set.truth.len(), set.signals.len());
    let mut inputs = vec![a.data.as_path()];
    inputs.extend(a.config.as_deref());
    staging.commit(manifest("ground-truth", &cfg, Some(cfg.seed), &inputs, workers)?)
}

pub fn train(a: TrainArgs, workers: usize) -> Result<()> {
    let cfg: TrainConfig = resolve(a.config.as_deref(), &a)?;
    cfg.validate()?;
    let ((train_s, train_t), (val_s, val_t)) = match (&a.pairs, &a.val_pairs, &a.data) {
        (Some(p), Some(v), _) => (load_pair_set(p)?, load_pair_set(v)?),
        (_, _, Some(d)) => {
            let ds = load_dataset(d)?;
            let build = |split, n_signals, n_pairs, seed| {
                build_pair_set(&ds.split(split), n_signals, cfg.slice_len, n_pairs, seed, CostKind::Absolute, Exec::Auto)
                    .map(|s| (s.signals, s.truth))
            };
            (
                build(Split::Train, cfg.n_signals, cfg.n_pairs, cfg.seed)?,
                build(Split::Val, cfg.n_val_signals, cfg.n_val_pairs, cfg.seed.wrapping_add(1))?,
            )
        }
        _ => bail!(UsageError("give --pairs and --val-pairs, or --data".into())),
    };
    let staging = Staging::new(&a.out)?;
    let outcome = learned_dtw::train::train(
        &cfg,
        TrainData {
            train_signals: &train_s,
            train_pairs: &train_t,
            val_signals: &val_s,
            val_pairs: &val_t,
        },
    )?;
    outcome.checkpoint.save(&staging.path("model.ckpt"))?;
    outcome.report.write_json(&staging.path("train_report.json"))?;
    outcome.report.write_curve_csv(&staging.path("loss_curve.csv"))?;
    log::info!(
        "best epoch {} with validation loss {:.6}",
        outcome.report.best_epoch,
        outcome.report.best_val_loss
    );
    let mut inputs: Vec<&Path> = [&a.pairs, &a.val_pairs, &a.data, &a.config].into_iter().flatten().map(|p| p.as_path()).collect();
    inputs.dedup();
    staging.commit(manifest("train", &cfg, Some(cfg.seed), &inputs, workers)?)
}

/// Picks a split and optionally slices it, with a generator seeded by `seed`.
fn signals_for_eval(
    ds: &Dataset,
    split: SplitName,
    slice_len: Option<usize>,
    range: Option<(usize, usize)>,
    seed: u64,
) -> Result<Vec<TimeSeries>> {
    let pool = select(ds, split);
    if pool.is_empty() {
        bail!(UsageError(format!("split {split:?} is empty")));
    }
    let mut rng = rng_from_seed(seed);
    Ok(match (slice_len, range) {
        (Some(_), Some(_)) => bail!(UsageError("use either slice_len or min_len/max_len".into())),
        (Some(len), None) => slice_fixed(&pool, len, &mut rng)?,
        (None, Some((lo, hi))) => sample_lengths(&pool, lo, hi, &mut rng)?,
        (None, None) => pool,
    })
}

fn range(min_len: Option<usize>, max_len: Option<usize>) -> Result<Option<(usize, usize)>> {
    match (min_len, max_len) {
        (Some(lo), Some(hi)) => Ok(Some((lo, hi))),
        (None, None) => Ok(None),
        _ => bail!(UsageError("min_len and max_len go together".into())),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RetrievalConfig {
    metric: MetricName,
    checkpoint: Option<PathBuf>,
    reference: MetricName,
    reference_checkpoint: Option<PathBuf>,
    n_t: usize,
    top_k: usize,
    reps: usize,
    seed: u64,
    split: SplitName,
    slice_len: Option<usize>,
    min_len: Option<usize>,
    max_len: Option<usize>,
    gamma: f64,
    radius: usize,
    cost: Cost,
    normalize: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            metric: MetricName::Siamese,
            checkpoint: None,
            reference: MetricName::Dtw,
            reference_checkpoint: None,
            n_t: 100,
            top_k: 5,
            reps: 8,
            seed: 0,
            split: SplitName::Test,
            slice_len: None,
            min_len: None,
            max_len: None,
            gamma: 1.0,
            radius: DEFAULT_RADIUS,
            cost: Cost::Absolute,
            normalize: true,
        }
    }
}

pub fn retrieval(a: RetrievalArgs, workers: usize) -> Result<()> {
    let cfg: RetrievalConfig = resolve(a.config.as_deref(), &a)?;
    let ds = load_dataset(&a.data)?;
    let metric = build_metric(cfg.metric, cfg.checkpoint.as_deref(), cfg.gamma, cfg.radius, cfg.cost, cfg.normalize)?;
    let reference = build_metric(
        cfg.reference,
        cfg.reference_checkpoint.as_deref(),
        cfg.gamma,
        cfg.radius,
        cfg.cost,
        cfg.normalize,
    )?;
    let signals = signals_for_eval(&ds, cfg.split, cfg.slice_len, range(cfg.min_len, cfg.max_len)?, cfg.seed)?;
    let staging = Staging::new(&a.out)?;
    let report = nn_retrieval_agreement(&metric, &reference, &signals, cfg.n_t, cfg.top_k, cfg.reps, cfg.seed, Exec::Auto)?;
    println!("{}: {:.2} +/- {:.2} %", report.metric, report.mean, report.std);
    write_json(&staging.path("retrieval.json"), &report)?;
    write_csv_rows(&staging.path("retrieval.csv"), RetrievalReport::CSV_HEADER, &[report.csv_row()])?;
    let inputs: Vec<&Path> = [Some(&a.data), cfg.checkpoint.as_ref(), cfg.reference_checkpoint.as_ref(), a.config.as_ref()]
        .into_iter()
        .flatten()
        .map(|p| p.as_path())
        .collect();
    staging.commit(manifest("eval retrieval", &cfg, Some(cfg.seed), &inputs, workers)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct KnnConfig {
    metric: MetricName,
    checkpoint: Option<PathBuf>,
    k: usize,
    reps: usize,
    n_classes: Option<usize>,
    seed: u64,
    split: SplitName,
    slice_len: Option<usize>,
    min_len: Option<usize>,
    max_len: Option<usize>,
    gamma: f64,
    radius: usize,
    cost: Cost,
    normalize: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            metric: MetricName::Siamese,
            checkpoint: None,
            k: 5,
            reps: 5,
            n_classes: None,
            seed: 0,
            split: SplitName::Test,
            slice_len: None,
            min_len: None,
            max_len: None,
            gamma: 1.0,
            radius: DEFAULT_RADIUS,
            cost: Cost::Absolute,
            normalize: true,
        }
    }
}

pub fn knn(a: KnnArgs, workers: usize) -> Result<()> {
    let cfg: KnnConfig = resolve(a.config.as_deref(), &a)?;
    let ds = load_dataset(&a.data)?;
    let metric = build_metric(cfg.metric, cfg.checkpoint.as_deref(), cfg.gamma, cfg.radius, cfg.cost, cfg.normalize)?;
    let signals = signals_for_eval(&ds, cfg.split, cfg.slice_len, range(cfg.min_len, cfg.max_len)?, cfg.seed)?;
    let staging = Staging::new(&a.out)?;
    let report = knn_macro_f1(&metric, &signals, cfg.k, cfg.reps, cfg.n_classes, cfg.seed, Exec::Auto)?;
    println!("{}: macro-F1 {:.4} +/- {:.4}", report.metric, report.mean, report.std);
    write_json(&staging.path("knn.json"), &report)?;
    write_csv_rows(&staging.path("knn.csv"), ClassifReport::CSV_HEADER, &[report.csv_row()])?;
    let inputs: Vec<&Path> = [Some(&a.data), cfg.checkpoint.as_ref(), a.config.as_ref()]
        .into_iter()
        .flatten()
        .map(|p| p.as_path())
        .collect();
    staging.commit(manifest("eval knn", &cfg, Some(cfg.seed), &inputs, workers)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BenchConfig {
    metrics: Vec<MetricName>,
    siamese_checkpoint: Option<PathBuf>,
    direct_checkpoint: Option<PathBuf>,
    lengths: Vec<usize>,
    reps: usize,
    seed: u64,
    gamma: f64,
    radius: usize,
    cost: Cost,
    normalize: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            metrics: vec![MetricName::Dtw, MetricName::Fastdtw, MetricName::Softdtw],
            siamese_checkpoint: None,
            direct_checkpoint: None,
            lengths: vec![500, 1000, 3000],
            reps: 1000,
            seed: 0,
            gamma: 1.0,
            radius: DEFAULT_RADIUS,
            cost: Cost::Absolute,
            normalize: true,
        }
    }
}

pub fn bench(a: BenchArgs, workers: usize) -> Result<()> {
    let cfg: BenchConfig = resolve(a.config.as_deref(), &a)?;
    if cfg.metrics.is_empty() || cfg.lengths.is_empty() {
        bail!(UsageError("bench needs at least one metric and one length".into()));
    }
    let metrics = cfg
        .metrics
        .iter()
        .map(|&m| {
            let ckpt = match m {
                MetricName::Siamese => cfg.siamese_checkpoint.as_deref(),
                MetricName::Direct => cfg.direct_checkpoint.as_deref(),
                _ => None,
            };
            build_metric(m, ckpt, cfg.gamma, cfg.radius, cfg.cost, cfg.normalize)
        })
        .collect::<Result<Vec<_>>>()?;
    let staging = Staging::new(&a.out)?;
    let refs: Vec<&dyn PairMetric> = metrics.iter().map(|m| m as &dyn PairMetric).collect();
    let report = timing_bench(&refs, &cfg.lengths, cfg.reps, cfg.seed)?;
    report.write_csv(&staging.path("timing.csv"))?;
    write_json(&staging.path("timing.json"), &report)?;
    let inputs: Vec<&Path> = [cfg.siamese_checkpoint.as_ref(), cfg.direct_checkpoint.as_ref(), a.config.as_ref()]
        .into_iter()
        .flatten()
        .map(|p| p.as_path())
        .collect();
    staging.commit(manifest("bench", &cfg, Some(cfg.seed), &inputs, workers)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PrototypesCliConfig {
    metric: MetricName,
    checkpoint: Option<PathBuf>,
    train_split: SplitName,
    val_split: SplitName,
    slice_len: Option<usize>,
    epochs: usize,
    lr: f64,
    beta: f64,
    batch_size: usize,
    init_members: usize,
    seed: u64,
    keep_best: bool,
    gamma: f64,
    cost: Cost,
}

impl Default for PrototypesCliConfig {
    fn default() -> Self {
        let p = PrototypeConfig::default();
        Self {
            metric: MetricName::Siamese,
            checkpoint: None,
            train_split: SplitName::Train,
            val_split: SplitName::Val,
            slice_len: None,
            epochs: p.epochs,
            lr: p.lr,
            beta: p.beta,
            batch_size: p.batch_size,
            init_members: p.init_members,
            seed: p.seed,
            keep_best: p.keep_best,
            gamma: 1.0,
            cost: Cost::Absolute,
        }
    }
}

pub fn prototypes(a: PrototypesArgs, workers: usize) -> Result<()> {
    let cfg: PrototypesCliConfig = resolve(a.config.as_deref(), &a)?;
    if matches!(cfg.metric, MetricName::Dtw | MetricName::Fastdtw) {
        bail!(UsageError(format!("metric {:?} is not differentiable", cfg.metric)));
    }
    let ds = load_dataset(&a.data)?;
    let metric = build_metric(cfg.metric, cfg.checkpoint.as_deref(), cfg.gamma, DEFAULT_RADIUS, cfg.cost, true)?;
    let train_s = signals_for_eval(&ds, cfg.train_split, cfg.slice_len, None, cfg.seed)?;
    let val_s = signals_for_eval(&ds, cfg.val_split, cfg.slice_len, None, cfg.seed.wrapping_add(1))?;
    let staging = Staging::new(&a.out)?;
    let pcfg = PrototypeConfig {
        epochs: cfg.epochs,
        lr: cfg.lr,
        beta: cfg.beta,
        batch_size: cfg.batch_size,
        init_members: cfg.init_members,
        seed: cfg.seed,
        keep_best: cfg.keep_best,
    };
    let report = train_prototypes(&metric as &dyn DifferentiableMetric, &train_s, &val_s, &pcfg)?;
    if report.checksum_before != report.checksum_after {
        bail!("model parameters changed during prototype learning");
    }
    println!(
        "accuracy {:.4} -> {:.4} (best {:.4} at epoch {})",
        report.accuracy[0],
        report.accuracy.last().copied().unwrap_or(f64::NAN),
        report.accuracy[report.best_epoch],
        report.best_epoch
    );
    write_json(&staging.path("prototypes.json"), &report)?;
    let rows: Vec<[String; 3]> = report
        .accuracy
        .iter()
        .zip(&report.loss)
        .enumerate()
        .map(|(e, (acc, loss))| [e.to_string(), format!("{acc:.6}"), format!("{loss:.6}")])
        .collect();
    write_csv_rows(&staging.path("accuracy.csv"), ["epoch", "accuracy", "loss"], &rows)?;
    let protos = Dataset {
        entries: report
            .set
            .prototypes
            .iter()
            .map(|p| DatasetEntry {
                series: p.clone(),
                subject: 0,
                split: Split::Train,
            })
            .collect(),
        provenance: "learned class prototypes".into(),
    };
    protos.save(&staging.path("prototypes"))?;
    let inputs: Vec<&Path> = [Some(&a.data), cfg.checkpoint.as_ref(), a.config.as_ref()]
        .into_iter()
        .flatten()
        .map(|p| p.as_path())
        .collect();
    staging.commit(manifest("prototypes", &cfg, Some(cfg.seed), &inputs, workers)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_metric_without_checkpoint_is_usage_error() {
        let e = build_metric(MetricName::Siamese, None, 1.0, 1, Cost::Absolute, true).unwrap_err();
        assert!(e.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn raw_signal_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.f32");
        let values = [0.5f32, -1.0, 2.0];
        fs::write(&p, values.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>()).unwrap();
        assert_eq!(read_signal(&p).unwrap().values(), &values);
        fs::write(&p, [0u8; 3]).unwrap();
        assert!(read_signal(&p).is_err());
    }
}
