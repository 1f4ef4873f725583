//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line each.
//!
//! The process exits with status 0 even when a criterion fails, so that the
//! workspace test run stays usable; set `ACCEPTANCE_STRICT=1` to turn any
//! failure into a non-zero exit.

mod common;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::time::Instant;

use learned_dtw::data::{build_pair_set, rng_from_seed, slice_fixed, synth_gen, Dataset, PairSet, PreprocessStats, Split, SynthConfig};
use learned_dtw::eval::{
    init_prototypes, knn_macro_f1, nn_retrieval_agreement, prototype_accuracy, timing_bench, train_prototypes, DifferentiableMetric, MetricHandle, PairMetric,
    PrototypeConfig,
};
use learned_dtw::metrics::{dtw_brute, dtw_value, fast_dtw, soft_dtw, soft_dtw_grad, CostKind, SoftDtwConfig};
use learned_dtw::nn::{Checkpoint, ModelKind};
use learned_dtw::par::Exec;
use learned_dtw::train::{self, Decision, EarlyStopping, TrainConfig, TrainData, TrainOutcome};
use learned_dtw::TimeSeries;
use rand::Rng;

const SLICE_LEN: usize = 256;
const N_SIGNALS: usize = 500;
const N_PAIRS: usize = 20_000;

/// Training pairs; `ACCEPTANCE_PAIRS` lowers it for quick local runs, in
/// which case the training criterion reports a failure.
fn n_pairs() -> usize {
    std::env::var("ACCEPTANCE_PAIRS").ok().and_then(|v| v.parse().ok()).unwrap_or(N_PAIRS)
}
const N_T: usize = 100;
const TOP_K: usize = 5;
const RETRIEVAL_REPS: usize = 5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Outcome = Result<Verdict, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// 1. Exact DTW against path enumeration.

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let levels = [0.0f64, 0.25, 0.5, 0.75, 1.0];
    let mut rng = rng_from_seed(101);
    let draw = |rng: &mut learned_dtw::data::Rng| -> Vec<f64> {
        let len = rng.random_range(1..=6);
        (0..len).map(|_| levels[rng.random_range(0..levels.len())]).collect()
    };
    let n = 10_000;
    let mut mismatches = 0;
    for _ in 0..n {
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        for cost in [CostKind::Absolute, CostKind::Squared] {
            let fast = dtw_value(&x, &y, cost).map_err(err)?;
            let brute = dtw_brute(&x, &y, cost).map_err(err)?.value;
            if fast != brute {
                mismatches += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(verdict(
        mismatches == 0 && secs < 60.0,
        format!("{n} pairs x 2 costs, {mismatches} mismatches, {secs:.1} s"),
    ))
}

// ---------------------------------------------------------------------------
// 2. Soft DTW value and bounds.

/// Independent soft DTW recursion with a stabilised soft minimum.
fn soft_dtw_oracle(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let (n, m) = (x.len(), y.len());
    let mut r = vec![vec![f64::INFINITY; m + 1]; n + 1];
    r[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let args = [r[i - 1][j - 1], r[i - 1][j], r[i][j - 1]];
            let lo = args.iter().cloned().fold(f64::INFINITY, f64::min);
            let s: f64 = args.iter().map(|a| (-(a - lo) / gamma).exp()).sum();
            r[i][j] = (x[i - 1] - y[j - 1]).abs() + lo - gamma * s.ln();
        }
    }
    r[n][m]
}

fn random_pair(rng: &mut learned_dtw::data::Rng, max_len: usize) -> (Vec<f64>, Vec<f64>) {
    let mut draw = || {
        let len = rng.random_range(1..=max_len);
        (0..len).map(|_| rng.random::<f64>()).collect::<Vec<f64>>()
    };
    (draw(), draw())
}

fn soft_dtw_correctness() -> Outcome {
    let cfg = SoftDtwConfig::new(0.1, CostKind::Absolute).map_err(err)?;
    let (x, y) = ([0.0f64, 1.0, 2.0], [0.0f64, 2.0]);
    let value = soft_dtw(&x, &y, &cfg).map_err(err)?;
    let oracle = soft_dtw_oracle(&x, &y, 0.1);
    let value_ok = (value - 0.9307).abs() <= 1e-4 && (value - oracle).abs() <= 1e-12;

    let mut rng = rng_from_seed(202);
    let mut above = 0;
    for _ in 0..1000 {
        let (x, y) = random_pair(&mut rng, 32);
        if soft_dtw(&x, &y, &cfg).map_err(err)? > dtw_value(&x, &y, CostKind::Absolute).map_err(err)? {
            above += 1;
        }
    }
    let sharp = SoftDtwConfig::new(1e-3, CostKind::Absolute).map_err(err)?;
    let mut worst_gap = 0.0f64;
    for _ in 0..1000 {
        let (x, y) = random_pair(&mut rng, 32);
        let gap = (soft_dtw(&x, &y, &sharp).map_err(err)? - dtw_value(&x, &y, CostKind::Absolute).map_err(err)?).abs();
        worst_gap = worst_gap.max(gap);
    }
    Ok(verdict(
        value_ok && above == 0 && worst_gap < 1e-2,
        format!("value {value:.6} (oracle {oracle:.6}), {above}/1000 above DTW, max gap at gamma 1e-3 {worst_gap:.2e}"),
    ))
}

// ---------------------------------------------------------------------------
// 3. Finite-difference gradients.

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(303);
    let h = 1e-5;
    let mut worst_metric = 0.0f64;
    for cost in [CostKind::Absolute, CostKind::Squared] {
        let cfg = SoftDtwConfig::new(0.5, cost).map_err(err)?;
        for _ in 0..50 {
            let (x, y) = random_pair(&mut rng, 12);
            let g = soft_dtw_grad(&x, &y, &cfg).map_err(err)?.grad_x;
            let mut num = Vec::with_capacity(x.len());
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let up = soft_dtw(&xp, &y, &cfg).map_err(err)?;
                xp[i] -= 2.0 * h;
                let down = soft_dtw(&xp, &y, &cfg).map_err(err)?;
                num.push((up - down) / (2.0 * h));
            }
            let diff: f64 = g.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(num.iter().map(|v| v * v).sum::<f64>().sqrt());
            if scale > 1e-8 {
                worst_metric = worst_metric.max(diff / scale);
            }
        }
    }
    let mut worst_net = 0.0f64;
    let mut worst_case = "";
    for case in common::gradcheck::cases() {
        let e = case.max_rel_err();
        if e > worst_net {
            worst_net = e;
            worst_case = case.name;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(verdict(
        worst_metric < 1e-4 && worst_net < 1e-3 && secs < 300.0,
        format!("soft DTW max rel err {worst_metric:.2e}, network max rel err {worst_net:.2e} ({worst_case}), {secs:.1} s"),
    ))
}

// ---------------------------------------------------------------------------
// 4. FastDTW never undercuts exact DTW.

fn fastdtw_admissibility() -> Outcome {
    let mut rng = rng_from_seed(404);
    let mut below = 0;
    let mut unequal_full = 0;
    for k in 0..1000 {
        let (x, y) = random_pair(&mut rng, 256);
        let exact = dtw_value(&x, &y, CostKind::Absolute).map_err(err)?;
        let radius = [0, 1, 2, 5][k % 4];
        let approx = fast_dtw(&x, &y, radius, CostKind::Absolute).map_err(err)?.value;
        if approx < exact - 1e-9 * exact.max(1.0) {
            below += 1;
        }
        if k % 10 == 0 {
            let full = fast_dtw(&x, &y, x.len().max(y.len()), CostKind::Absolute).map_err(err)?.value;
            if full != exact {
                unequal_full += 1;
            }
        }
    }
    Ok(verdict(
        below == 0 && unequal_full == 0,
        format!("{below}/1000 below exact DTW, {unequal_full}/100 unequal at full radius"),
    ))
}

// ---------------------------------------------------------------------------
// Desk-scale data and models shared by criteria 5 to 10.

struct DeskData {
    stats: PreprocessStats,
    train: PairSet,
    val: PairSet,
    /// One slice per test-split signal.
    test: Vec<TimeSeries>,
}

fn dataset(seed: u64) -> Result<Dataset, String> {
    synth_gen(&SynthConfig::eeg_like(5, 200, 2 * SLICE_LEN, seed)).map_err(err)
}

fn test_slices(ds: &Dataset, seed: u64) -> Result<Vec<TimeSeries>, String> {
    slice_fixed(&ds.split(Split::Test), SLICE_LEN, &mut rng_from_seed(seed)).map_err(err)
}

fn desk_data() -> Result<DeskData, String> {
    let mut ds = dataset(1)?;
    let stats = ds.preprocess().map_err(err)?;
    let train = build_pair_set(&ds.split(Split::Train), N_SIGNALS, SLICE_LEN, n_pairs(), 2, CostKind::Absolute, Exec::Auto)
        .map_err(err)?;
    let val = build_pair_set(&ds.split(Split::Val), 100, SLICE_LEN, 2000, 3, CostKind::Absolute, Exec::Auto).map_err(err)?;
    let test = test_slices(&ds, 4)?;
    Ok(DeskData { stats, train, val, test })
}

struct Desk {
    data: DeskData,
    runs: Vec<(TrainOutcome, f64)>,
}

impl Desk {
    fn metric(&self, kind: ModelKind) -> Result<MetricHandle, String> {
        let (run, _) = self.runs.iter().find(|(r, _)| r.checkpoint.kind == kind).ok_or("model missing")?;
        MetricHandle::from_checkpoint(&run.checkpoint).map_err(err)
    }
}

fn desk_config(kind: ModelKind) -> TrainConfig {
    let (max_epochs, patience) = match kind {
        ModelKind::Siamese => (7, 3),
        ModelKind::Direct => (15, 4),
    };
    TrainConfig {
        model_kind: kind,
        slice_len: SLICE_LEN,
        n_signals: N_SIGNALS,
        n_pairs: n_pairs(),
        max_epochs,
        patience,
        seed: 5,
        ..TrainConfig::default()
    }
}

fn train_desk() -> Result<Desk, String> {
    let data = desk_data()?;
    let mut runs = Vec::new();
    for kind in [ModelKind::Siamese, ModelKind::Direct] {
        let start = Instant::now();
        let outcome = train::train(
            &desk_config(kind),
            TrainData {
                train_signals: &data.train.signals,
                train_pairs: &data.train.truth,
                val_signals: &data.val.signals,
                val_pairs: &data.val.truth,
            },
        )
        .map_err(err)?;
        let elapsed = start.elapsed().as_secs_f64();
        // Kept for inspection with the CLI.
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
        std::fs::create_dir_all(&dir).map_err(err)?;
        outcome.checkpoint.save(&dir.join(format!("{kind}.ckpt"))).map_err(err)?;
        runs.push((outcome, elapsed));
    }
    Ok(Desk { data, runs })
}

// ---------------------------------------------------------------------------
// 5. Both trainers halve their own validation approximation error.

fn early_stopping_sequences() -> bool {
    let run = |patience, losses: &[f64]| {
        let mut es = EarlyStopping::new(patience);
        let stop = losses.iter().enumerate().find_map(|(e, &l)| (es.observe(e, l) == Decision::Stop).then_some(e));
        (stop, es.best().map(|b| b.0))
    };
    run(2, &[1.0, 0.8, 0.9, 0.85, 0.5]) == (Some(3), Some(1))
        && run(3, &[1.0, 0.9, 0.8, 0.7]) == (None, Some(3))
        && run(1, &[0.5, 0.5]) == (Some(1), Some(0))
        && run(2, &[f64::NAN, 1.0, 2.0, 3.0]) == (Some(3), Some(1))
}

fn desk_training(desk: &Desk) -> Outcome {
    let mut pass = early_stopping_sequences() && desk.data.train.truth.len() >= N_PAIRS;
    let mut parts = vec![format!(
        "{} pairs, injected sequences {}",
        desk.data.train.truth.len(),
        if early_stopping_sequences() { "ok" } else { "WRONG" }
    )];
    for (run, secs) in &desk.runs {
        let r = &run.report;
        let first = r.epoch(0).ok_or("no epoch 0")?.val.approx;
        let best = r.epoch(r.best_epoch).ok_or("no best epoch")?.val.approx;
        // The checkpoint must hold the best epoch's parameters.
        let recheck = train::validate(&run.checkpoint, &desk.data.val.signals, &desk.data.val.truth).map_err(err)?;
        let stored = run.checkpoint.best.as_ref().map(|b| b.epoch);
        let selected = stored == Some(r.best_epoch)
            && (recheck.total(r.lambda) - r.best_val_loss).abs() <= 1e-6 * r.best_val_loss.abs().max(1e-12);
        let ok = best <= 0.5 * first && selected && r.epochs.len() <= 16 && *secs < 1800.0;
        pass &= ok;
        parts.push(format!(
            "{}: epoch-0 {first:.5} -> best {best:.5} at epoch {} ({} epochs, {secs:.0} s, checkpoint {})",
            r.model_kind,
            r.best_epoch,
            r.epochs.len() - 1,
            if selected { "matches" } else { "DIFFERS" }
        ));
    }
    Ok(verdict(pass, parts.join("; ")))
}

// ---------------------------------------------------------------------------
// 6. Retrieval agreement against exact DTW.

/// Pseudo-random but deterministic symmetric scores.
struct RandomMetric;

impl PairMetric for RandomMetric {
    fn name(&self) -> &str {
        "random"
    }

    fn distance(&self, x: &[f32], y: &[f32]) -> learned_dtw::Result<f64> {
        let key = |s: &[f32]| {
            let mut h = DefaultHasher::new();
            s.iter().for_each(|v| v.to_bits().hash(&mut h));
            h.finish()
        };
        let (a, b) = (key(x), key(y));
        let mut h = DefaultHasher::new();
        (a.min(b), a.max(b)).hash(&mut h);
        Ok(h.finish() as f64 / u64::MAX as f64)
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

fn agreement(metric: &dyn PairMetric, signals: &[TimeSeries]) -> Result<f64, String> {
    let reference = MetricHandle::exact_dtw();
    Ok(nn_retrieval_agreement(metric, &reference, signals, N_T, TOP_K, RETRIEVAL_REPS, 6, Exec::Auto)
        .map_err(err)?
        .mean)
}

fn retrieval_trend(desk: &Desk, scores: &mut Vec<(ModelKind, f64)>) -> Outcome {
    let test = &desk.data.test;
    let baseline = TOP_K as f64 / (N_T - 1) as f64 * 100.0;
    let random = agreement(&RandomMetric, test)?;
    let itself = agreement(&MetricHandle::exact_dtw(), test)?;
    let mut pass = itself == 100.0;
    let mut parts = vec![format!("{} test slices, random {random:.2}% (expected {baseline:.2}%), DTW vs itself {itself:.1}%", test.len())];
    for kind in [ModelKind::Siamese, ModelKind::Direct] {
        let a = agreement(&desk.metric(kind)?, test)?;
        pass &= a >= 3.0 * baseline;
        scores.push((kind, a));
        parts.push(format!("{kind} {a:.2}%"));
    }
    Ok(verdict(pass, parts.join(", ")))
}

// ---------------------------------------------------------------------------
// 7. KNN macro-F1 close to exact DTW.

fn classification_fidelity(desk: &Desk) -> Outcome {
    let test = &desk.data.test;
    let f1 = |m: &dyn PairMetric| knn_macro_f1(m, test, 5, 3, Some(5), 7, Exec::Auto).map(|r| r.mean).map_err(err);
    let reference = f1(&MetricHandle::exact_dtw())?;
    let mut pass = reference >= 0.9;
    let mut parts = vec![format!("exact DTW {reference:.3}")];
    for kind in [ModelKind::Siamese, ModelKind::Direct] {
        let f = f1(&desk.metric(kind)?)?;
        pass &= (f - reference).abs() <= 0.15;
        parts.push(format!("{kind} {f:.3}"));
    }
    Ok(verdict(pass, parts.join(", ")))
}

// ---------------------------------------------------------------------------
// 8. Timing shape.

fn timing_shape(desk: &Desk) -> Outcome {
    let dtw = MetricHandle::exact_dtw();
    let dtw_report = timing_bench(&[&dtw], &[500, 1000], 5, 8).map_err(err)?;
    let dtw_ratio = dtw_report.ratio("dtw", 1000, 500).ok_or("missing dtw rows")?;
    let siamese = desk.metric(ModelKind::Siamese)?;
    let direct = desk.metric(ModelKind::Direct)?;
    let model_report = timing_bench(&[&siamese, &direct], &[500, 3000], 5, 8).map_err(err)?;
    let s_ratio = model_report.ratio("siamese", 3000, 500).ok_or("missing siamese rows")?;
    let d_ratio = model_report.ratio("direct", 3000, 500).ok_or("missing direct rows")?;

    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("timing.csv");
    model_report.write_csv(&path).map_err(err)?;
    let text = std::fs::read_to_string(&path).map_err(err)?;
    let schema_ok = text.lines().next() == Some("metric,length,reps,total_seconds,per_call_seconds")
        && text.lines().count() == 1 + model_report.rows.len();

    let pass = (2.0..=8.0).contains(&dtw_ratio) && s_ratio <= 2.0 && d_ratio <= 2.0 && schema_ok;
    Ok(verdict(
        pass,
        format!(
            "DTW 1000/500 {dtw_ratio:.2}x, siamese 3000/500 {s_ratio:.2}x, direct 3000/500 {d_ratio:.2}x, CSV schema {}",
            if schema_ok { "ok" } else { "WRONG" }
        ),
    ))
}

// ---------------------------------------------------------------------------
// 9. Prototype learning through the frozen siamese model.

fn prototype_learning(desk: &Desk) -> Outcome {
    let mut ds = synth_gen(&SynthConfig::eeg_like(3, 60, SLICE_LEN, 9)).map_err(err)?;
    ds.apply_preprocessing(&desk.data.stats).map_err(err)?;
    let mut signals = ds.signals();
    use rand::seq::SliceRandom;
    signals.shuffle(&mut rng_from_seed(10));
    // Prototypes are fitted on the first third, the epoch is chosen on the
    // second and accuracy is reported on the third.
    let n = signals.len() / 3;
    let (fit, rest) = signals.split_at(n);
    let (select, held_out) = rest.split_at(n);
    let metric = desk.metric(ModelKind::Siamese)?;
    let cfg = PrototypeConfig {
        seed: 11,
        ..PrototypeConfig::default()
    };
    let report = train_prototypes(&metric as &dyn DifferentiableMetric, fit, select, &cfg).map_err(err)?;
    let init = init_prototypes(fit, cfg.init_members, cfg.seed).map_err(err)?;
    let before = prototype_accuracy(&init, &metric, held_out).map_err(err)?;
    let after = prototype_accuracy(&report.set, &metric, held_out).map_err(err)?;
    let frozen = report.checksum_before == report.checksum_after;
    Ok(verdict(
        after >= 0.8 && after > before && frozen,
        format!(
            "held-out accuracy {before:.3} -> {after:.3} (epoch {} of {}), model checksum {}",
            report.best_epoch,
            cfg.epochs,
            if frozen { "unchanged" } else { "CHANGED" }
        ),
    ))
}

// ---------------------------------------------------------------------------
// 10. Transfer to a fresh dataset from the same generator family.

fn transfer(desk: &Desk, scores_a: &[(ModelKind, f64)]) -> Outcome {
    let mut ds_b = dataset(12)?;
    // The model sees dataset B through dataset A's preprocessing.
    ds_b.apply_preprocessing(&desk.data.stats).map_err(err)?;
    let test_b = test_slices(&ds_b, 13)?;
    let mut pass = !scores_a.is_empty();
    let mut parts = Vec::new();
    let dir = tempfile::tempdir().map_err(err)?;
    for &(kind, a) in scores_a {
        // Evaluate the checkpoint as written to disk, with no further training.
        let (run, _) = desk.runs.iter().find(|(r, _)| r.checkpoint.kind == kind).ok_or("model missing")?;
        let path = dir.path().join(format!("{kind}.ckpt"));
        run.checkpoint.save(&path).map_err(err)?;
        let metric = MetricHandle::from_checkpoint(&Checkpoint::load(&path).map_err(err)?).map_err(err)?;
        let b = agreement(&metric, &test_b)?;
        pass &= (a - b).abs() <= 10.0;
        parts.push(format!("{kind} A {a:.2}% / B {b:.2}%"));
    }
    Ok(verdict(pass, parts.join(", ")))
}

// ---------------------------------------------------------------------------

fn report(id: usize, name: &str, outcome: Outcome, failures: &mut usize) {
    let (pass, detail) = match outcome {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !pass {
        *failures += 1;
    }
    println!("[{}] {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn main() {
    let start = Instant::now();
    let mut failures = 0;
    report(1, "exact DTW equals path enumeration", oracle_equivalence(), &mut failures);
    report(2, "soft DTW value and bounds", soft_dtw_correctness(), &mut failures);
    report(3, "finite-difference gradients", gradients(), &mut failures);
    report(4, "FastDTW admissibility", fastdtw_admissibility(), &mut failures);

    match train_desk() {
        Ok(desk) => {
            report(5, "desk-scale training", desk_training(&desk), &mut failures);
            let mut scores = Vec::new();
            report(6, "retrieval agreement trend", retrieval_trend(&desk, &mut scores), &mut failures);
            report(7, "classification fidelity", classification_fidelity(&desk), &mut failures);
            report(8, "timing shape", timing_shape(&desk), &mut failures);
            report(9, "prototype learning through a frozen model", prototype_learning(&desk), &mut failures);
            report(10, "transfer to a new dataset", transfer(&desk, &scores), &mut failures);
        }
        Err(e) => {
            for (id, name) in [
                (5, "desk-scale training"),
                (6, "retrieval agreement trend"),
                (7, "classification fidelity"),
                (8, "timing shape"),
                (9, "prototype learning through a frozen model"),
                (10, "transfer to a new dataset"),
            ] {
                report(id, name, Err(format!("desk training failed: {e}")), &mut failures);
            }
        }
    }
    println!("acceptance: {} of 10 passed in {:.0} s", 10 - failures, start.elapsed().as_secs_f64());
    if failures > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
