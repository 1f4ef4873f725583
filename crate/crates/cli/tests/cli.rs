use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ldtw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldtw"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn ldtw")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_signal(path: &Path, values: &[f32]) {
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(path, text).unwrap();
}

fn gen_small(out: &Path, seed: &str) -> Output {
    ldtw(&[
        "gen-data", "--out", p(out), "--n-classes", "3", "--signals-per-class", "12",
        "--min-len", "300", "--max-len", "320", "--n-subjects", "6", "--seed", seed,
    ])
}

#[test]
fn compute_dtw_and_soft_dtw() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (dir.path().join("x.csv"), dir.path().join("y.csv"));
    write_signal(&x, &[0.0, 1.0, 2.0]);
    write_signal(&y, &[0.0, 2.0]);

    let out = ldtw(&["compute", p(&x), p(&y)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "1.000000");

    let out = ldtw(&["compute", p(&x), p(&y), "--metric", "softdtw", "--gamma", "0.1"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0.930683");

    let out = ldtw(&["compute", p(&x), p(&y), "--path"]);
    let lines: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines.first().map(String::as_str), Some("1.000000"));
    assert_eq!(lines.last().map(String::as_str), Some("2,1"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    write_signal(&x, &[0.0, 1.0]);

    let bad_gamma = ldtw(&["compute", p(&x), p(&x), "--metric", "softdtw", "--gamma", "0"]);
    assert_eq!(bad_gamma.status.code(), Some(2));

    let missing = ldtw(&["compute", p(&x), p(&dir.path().join("nope.csv"))]);
    assert_eq!(missing.status.code(), Some(2));

    let unknown_flag = ldtw(&["gen-data", "--out", p(&dir.path().join("d")), "--bogus", "1"]);
    assert_eq!(unknown_flag.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "n_classes = 3\nbogus_key = 1\n").unwrap();
    let unknown_key = ldtw(&["gen-data", "--config", p(&cfg), "--out", p(&dir.path().join("d"))]);
    assert_eq!(unknown_key.status.code(), Some(2));
    assert!(!dir.path().join("d").exists());
}

#[test]
fn help_lists_subcommands() {
    let out = ldtw(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for cmd in ["compute", "gen-data", "preprocess", "ground-truth", "train", "eval", "bench", "prototypes"] {
        assert!(text.contains(cmd), "help is missing {cmd}");
    }
}

#[test]
fn gen_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(gen_small(&a, "4").status.success());
    assert!(gen_small(&b, "4").status.success());
    let outputs = |d: &Path| {
        let m: serde_json::Value = serde_json::from_slice(&fs::read(d.join("run_manifest.json")).unwrap()).unwrap();
        m["outputs"].clone()
    };
    assert_eq!(outputs(&a), outputs(&b));
    assert!(!outputs(&a).as_object().unwrap().is_empty());
}

#[test]
fn refuses_to_overwrite_and_leaves_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert!(gen_small(&out, "1").status.success());
    assert!(!gen_small(&out, "2").status.success());

    // A failing command must not leave its staging directory behind.
    let missing = dir.path().join("missing");
    let failed = ldtw(&["preprocess", "--data", p(&missing), "--out", p(&dir.path().join("pre"))]);
    assert!(!failed.status.success());
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.contains("partial"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
    assert!(!dir.path().join("pre").exists());
}

#[test]
fn train_then_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    assert!(gen_small(&d("raw"), "1").status.success());
    assert!(ldtw(&["preprocess", "--data", p(&d("raw")), "--out", p(&d("pre"))]).status.success());

    let train = ldtw(&[
        "train", "--data", p(&d("pre")), "--out", p(&d("model")), "--model-kind", "direct",
        "--hidden", "8", "--max-epochs", "2", "--patience", "2", "--n-signals", "10", "--n-pairs", "40",
        "--n-val-signals", "5", "--n-val-pairs", "6", "--slice-len", "256", "--batch-size", "8",
    ]);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    for f in ["model.ckpt", "train_report.json", "loss_curve.csv", "run_manifest.json"] {
        assert!(d("model").join(f).exists(), "missing {f}");
    }
    let curve = fs::read_to_string(d("model").join("loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 3, "header plus epochs 0..=2");

    let ckpt = d("model").join("model.ckpt");
    let knn = ldtw(&[
        "eval", "knn", "--data", p(&d("pre")), "--out", p(&d("knn")), "--metric", "direct",
        "--checkpoint", p(&ckpt), "--split", "all", "--slice-len", "256", "--reps", "1", "--k", "1",
    ]);
    assert!(knn.status.success(), "{}", String::from_utf8_lossy(&knn.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d("knn").join("knn.json")).unwrap()).unwrap();
    assert!(report.is_object());

    let wrong_kind = ldtw(&[
        "eval", "knn", "--data", p(&d("pre")), "--out", p(&d("knn2")), "--metric", "siamese",
        "--checkpoint", p(&ckpt), "--split", "all", "--slice-len", "256",
    ]);
    assert_eq!(wrong_kind.status.code(), Some(2));

    let retrieval = |out: &str| {
        ldtw(&[
            "eval", "retrieval", "--data", p(&d("pre")), "--out", p(&d(out)), "--metric", "direct",
            "--checkpoint", p(&ckpt), "--split", "all", "--slice-len", "256", "--nt", "12", "--reps", "2",
        ])
    };
    assert!(retrieval("r1").status.success());
    assert!(retrieval("r2").status.success());
    assert_eq!(
        fs::read(d("r1").join("retrieval.json")).unwrap(),
        fs::read(d("r2").join("retrieval.json")).unwrap()
    );
}
