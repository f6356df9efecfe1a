//! End-to-end tests of the `disent` binary: exit codes, output contracts,
//! config overrides, and the manual gen-data/train/embed/cluster/evaluate
//! pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn disent(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disent"))
        .args(args)
        .current_dir(dir)
        .env_remove("DISENT_SEED_OVERRIDE")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

/// Settings that make every subcommand cheap.
const FAST: &[&str] = &[
    "--set",
    "dataset.n_per_class=20",
    "--set",
    "dataset.n_classes=4",
    "--set",
    "dataset.dim=6",
    "--set",
    "model.layer_sizes=[6,10,6,1]",
    "--set",
    "train.epochs=20",
    "--set",
    "train.batch_size=32",
    "--set",
    "cluster.k=4",
    "--set",
    "cluster.n_init=3",
];

fn fast_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = Vec::new();
    args.extend_from_slice(extra);
    args.extend_from_slice(FAST);
    args
}

#[test]
fn evaluate_identical_files_prints_ami_one() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.txt");
    std::fs::write(&labels, "0\n0\n1\n1\n2\n2\n").unwrap();
    let out = disent(
        &["evaluate", labels.to_str().unwrap(), labels.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("ami=1.0"), "stdout: {text}");
    assert!(text.contains("nmi=1.0"), "stdout: {text}");
}

#[test]
fn evaluate_missing_file_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = disent(&["evaluate", "nope.txt", "nope.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn unknown_set_key_is_validation_error_listing_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = disent(&["gen-data", "--set", "loss.margarine=1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("unknown config key 'loss.margarine'"), "{err}");
    assert!(err.contains("loss.margin"), "{err}");
}

#[test]
fn unknown_config_file_key_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"train.epochz": 5}"#).unwrap();
    let out = disent(
        &["run-experiment", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("train.epochz"));
}

#[test]
fn help_documents_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = disent(&["--help"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for key in [
        "dataset.kind",
        "loss.margin",
        "cluster.k",
        "experiment.seeds",
        "output.dir",
        "DISENT_SEED_OVERRIDE",
    ] {
        assert!(text.contains(key), "--help does not mention {key}");
    }
}

#[test]
fn gen_data_writes_csv_with_expected_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = disent(&fast_args(&["gen-data", "--set", "output.dir=out"]), dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("out/dataset.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "feature_0,feature_1,feature_2,feature_3,feature_4,feature_5,fine_label,group_label"
    );
    assert_eq!(csv.lines().count(), 81);
}

#[test]
fn manual_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = "--set";
    let set_out = "output.dir=out";

    let steps: &[&[&str]] = &[
        &["gen-data"],
        &["train", "--set", "loss.kind=multi"],
        &["embed"],
        &["cluster"],
    ];
    for step in steps {
        let mut args = fast_args(step);
        args.push(out_dir);
        args.push(set_out);
        let out = disent(&args, dir.path());
        assert!(
            out.status.success(),
            "step {step:?} failed: {}",
            stderr(&out)
        );
    }
    assert!(dir.path().join("out/model.json").exists());
    assert!(dir.path().join("out/embeddings.csv").exists());
    assert!(dir.path().join("out/fine_labels.txt").exists());
    assert!(dir.path().join("out/assignments.txt").exists());

    let out = disent(
        &[
            "evaluate",
            "out/fine_labels.txt",
            "out/assignments.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let ami_line = text
        .lines()
        .find(|l| l.starts_with("ami="))
        .expect("ami line");
    let ami: f64 = ami_line.trim_start_matches("ami=").parse().unwrap();
    assert!((-1.0..=1.0).contains(&ami));
}

#[test]
fn run_experiment_rerun_is_byte_identical_and_echoes_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = fast_args(&["run-experiment"]);
    args.extend_from_slice(&[
        "--set",
        "experiment.methods=[\"baseline\",\"multi\"]",
        "--set",
        "experiment.seeds=[1,2]",
        "--set",
        "loss.multi.margin=0.25",
        "--set",
        "output.dir=out",
    ]);

    let out = disent(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv1 = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let json1 = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();

    let out = disent(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv2 = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv1, csv2, "report.csv must be byte-identical across reruns");

    // The override shows up in the provenance echo.
    let report: serde_json::Value = serde_json::from_str(&json1).unwrap();
    assert_eq!(
        report["provenance"]["config"]["loss.multi.margin"],
        serde_json::json!(0.25)
    );
    // CSV schema observed by a consumer.
    assert!(csv1.starts_with("method,seed,split,ami,nmi,train_acc\n"));
    // 2 methods x 2 seeds x 2 splits + header.
    assert_eq!(csv1.lines().count(), 9);
}

#[test]
fn seed_override_env_replaces_all_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = fast_args(&["run-experiment"]);
    args.extend_from_slice(&[
        "--set",
        "experiment.methods=[\"baseline\"]",
        "--set",
        "output.dir=out",
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_disent"))
        .args(&args)
        .current_dir(dir.path())
        .env("DISENT_SEED_OVERRIDE", "42")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(
        report["provenance"]["config"]["experiment.seeds"],
        serde_json::json!([42])
    );
    assert_eq!(
        report["provenance"]["config"]["train.seed"],
        serde_json::json!(42)
    );
    assert_eq!(report["rows"][0]["seed"], serde_json::json!(42));
}

#[test]
fn bad_env_override_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_disent"))
        .args(["gen-data"])
        .current_dir(dir.path())
        .env("DISENT_SEED_OVERRIDE", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diagnostics_writes_plot_ready_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = fast_args(&["diagnostics", "--set", "loss.kind=multi"]);
    args.extend_from_slice(&["--set", "output.dir=out"]);
    let out = disent(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));

    let hist = std::fs::read_to_string(dir.path().join("out/histogram.csv")).unwrap();
    assert!(hist.starts_with("class,neuron,count\n"));
    // 4 classes x 6 representation neurons + header.
    assert_eq!(hist.lines().count(), 25);

    let pca = std::fs::read_to_string(dir.path().join("out/pca.tsv")).unwrap();
    assert!(pca.starts_with("pc1\tpc2\tfine_label\tgroup_label\n"));
    // Validation split of 80 samples at 0.8/0.1/0.1 is 8 rows.
    assert_eq!(pca.lines().count(), 9);
}

#[test]
fn sweep_k_emits_expected_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = fast_args(&["sweep-k"]);
    args.extend_from_slice(&[
        "--set",
        "experiment.methods=[\"baseline\"]",
        "--set",
        "experiment.seeds=[1]",
        "--set",
        "sweep.k_min=2",
        "--set",
        "sweep.k_max=5",
        "--set",
        "output.dir=out",
    ]);
    let out = disent(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(csv.starts_with("method,seed,k,ami\n"));
    // 1 method x 1 seed x 4 k values + header.
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn invalid_sweep_range_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = disent(
        &["sweep-k", "--set", "sweep.k_min=9", "--set", "sweep.k_max=3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}
