//! `disent` — train small classifiers with auxiliary disentanglement
//! losses and evaluate the learned representations by clustering.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use disent_cli::config::FlatConfig;
use disent_cli::error::{CliError, CliResult};
use disent_cli::harness;
use disent_cli::report::atomic_write;

use disent_core::clustering::{kmeans, KmeansParams};
use disent_core::data::save_csv;
use disent_core::metrics::{ami, nmi};
use disent_core::network::{embed, load_model, save_model, train, TrainConfig};
use disent_core::numerics::DenseMatrix;

#[derive(Parser)]
#[command(
    name = "disent",
    version,
    about = "Train binary classifiers with pairwise-KL disentanglement losses and score their representations with KMeans + AMI/NMI",
    after_long_help = config_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn config_help() -> String {
    format!(
        "{}\n\nExit codes: 0 success, 1 validation error, 2 runtime error.\n\
         The env var DISENT_SEED_OVERRIDE=<integer> overrides every configured seed.",
        FlatConfig::help_text()
    )
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON config file of dotted keys; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. --set loss.margin=0.5 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured dataset and write it as CSV.
    GenData {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train one model with the configured loss and save it as JSON.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Embed the dataset at the representation layer; write embeddings and labels.
    Embed {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run KMeans over an embeddings CSV and write the assignments.
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score two label files (one integer per line) with AMI and NMI.
    Evaluate {
        /// Ground-truth labels.
        truth: PathBuf,
        /// Predicted labels.
        predicted: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Full protocol: train each method x seed, cluster embeddings, report AMI/NMI.
    RunExperiment {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-cluster trained models across a range of cluster counts.
    SweepK {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export the activation histogram and 2-component PCA of a trained model.
    Diagnostics {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn build_config(common: &CommonArgs) -> CliResult<disent_cli::ExperimentConfig> {
    let mut flat = match &common.config {
        Some(path) => FlatConfig::from_file(path)?,
        None => FlatConfig::default(),
    };
    for assignment in &common.set {
        flat.apply_set(assignment)?;
    }
    flat.apply_env_override()?;
    flat.resolve()
}

fn cmd_gen_data(common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let ds = harness::prepare_dataset(&cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("dataset.csv");
    save_csv(&ds, &path).map_err(CliError::from)?;
    println!(
        "wrote {} samples x {} features ({}) to {}",
        ds.len(),
        ds.dim(),
        ds.name,
        path.display()
    );
    Ok(())
}

fn cmd_train(common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let (train_ds, _, _) = harness::prepare_splits(&cfg)?;
    let model = disent_core::network::init_model(
        &cfg.layer_sizes,
        &cfg.activations,
        cfg.train_seed,
    )?;
    let train_config = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        loss_spec: cfg.run_loss_spec(),
        seed: cfg.train_seed,
        shuffle: cfg.shuffle,
    };
    let (model, log) = train(model, train_ds.training_view(), &train_config)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.model_path_or_default();
    save_model(&model, &path)?;
    let last = log.epochs.last().expect("at least one epoch");
    println!(
        "trained {} epochs: task_loss={} aux_loss={} accuracy={}",
        log.epochs.len(),
        last.task_loss,
        last.aux_loss,
        last.train_accuracy
    );
    println!("model saved to {}", path.display());
    Ok(())
}

fn cmd_embed(common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let model = load_model(&cfg.model_path_or_default())?;
    let ds = harness::prepare_dataset(&cfg)?;
    let layer = cfg.representation_layer();
    let representation = embed(&model, &ds.features, layer)?;

    let mut csv = (0..representation.cols())
        .map(|i| format!("e_{i}"))
        .collect::<Vec<_>>()
        .join(",");
    csv.push('\n');
    for i in 0..representation.rows() {
        let row = representation
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",");
        csv.push_str(&row);
        csv.push('\n');
    }
    let emb_path = cfg.output_dir.join("embeddings.csv");
    atomic_write(&emb_path, csv.as_bytes())?;

    let labels: String = ds
        .fine_labels
        .iter()
        .map(|l| format!("{l}\n"))
        .collect();
    let labels_path = cfg.output_dir.join("fine_labels.txt");
    atomic_write(&labels_path, labels.as_bytes())?;
    println!(
        "embedded {} samples at layer {layer} -> {} and {}",
        ds.len(),
        emb_path.display(),
        labels_path.display()
    );
    Ok(())
}

fn read_embeddings_csv(path: &Path) -> CliResult<DenseMatrix> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let d = reader.headers()?.len();
    let mut data = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record?;
        for field in record.iter() {
            data.push(field.parse::<f64>().map_err(|e| {
                CliError::Runtime(format!("bad value '{field}' in {}: {e}", path.display()))
            })?);
        }
        n += 1;
    }
    DenseMatrix::from_vec(n, d, data).map_err(CliError::from)
}

fn cmd_cluster(common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let embeddings = read_embeddings_csv(&cfg.cluster_input_or_default())?;
    let result = kmeans(
        &embeddings,
        &KmeansParams {
            k: cfg.cluster_k,
            n_init: cfg.cluster_n_init,
            max_iter: cfg.cluster_max_iter,
            tol: cfg.cluster_tol,
            seed: cfg.cluster_seed,
        },
    )?;
    let assignments: String = result
        .assignments
        .iter()
        .map(|a| format!("{a}\n"))
        .collect();
    let path = cfg.output_dir.join("assignments.txt");
    atomic_write(&path, assignments.as_bytes())?;
    println!(
        "k={} inertia={} iterations={} restart={} -> {}",
        cfg.cluster_k,
        result.inertia,
        result.iterations_run,
        result.restart_index,
        path.display()
    );
    Ok(())
}

/// Reads one integer label per line; a single non-numeric first line is
/// tolerated as a header.
fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<usize>() {
            Ok(v) => labels.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(CliError::Runtime(format!(
                    "{} line {}: bad label '{line}': {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if labels.is_empty() {
        return Err(CliError::Runtime(format!(
            "{} contains no labels",
            path.display()
        )));
    }
    Ok(labels)
}

fn cmd_evaluate(truth: &Path, predicted: &Path, common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let u = read_labels(truth)?;
    let v = read_labels(predicted)?;
    let ami_score = ami(&u, &v, cfg.ami_norm)?;
    let nmi_score = nmi(&u, &v, cfg.nmi_norm)?;
    // Debug float formatting keeps a decimal point on whole numbers.
    println!("ami={ami_score:?}");
    println!("nmi={nmi_score:?}");
    Ok(())
}

fn cmd_run_experiment(common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let report = harness::run_experiment(&cfg, &cfg.output_dir)?;
    println!("method       split       ami_mean  nmi_mean  train_acc");
    for agg in &report.aggregates {
        println!(
            "{:<12} {:<11} {:<9.4} {:<9.4} {:.4}",
            agg.method, agg.split, agg.ami_mean, agg.nmi_mean, agg.train_acc_mean
        );
    }
    println!(
        "report written to {} and {}",
        cfg.output_dir.join("report.csv").display(),
        cfg.output_dir.join("report.json").display()
    );
    Ok(())
}

fn cmd_sweep_k(common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let rows = harness::sweep_k(&cfg, &cfg.output_dir)?;
    println!(
        "swept k in [{}, {}]: {} rows -> {}",
        cfg.sweep_k_min,
        cfg.sweep_k_max,
        rows.len(),
        cfg.output_dir.join("sweep.csv").display()
    );
    Ok(())
}

fn cmd_diagnostics(common: &CommonArgs) -> CliResult<()> {
    let cfg = build_config(common)?;
    let (train_ds, val_ds, _) = harness::prepare_splits(&cfg)?;
    let model = disent_core::network::init_model(
        &cfg.layer_sizes,
        &cfg.activations,
        cfg.train_seed,
    )?;
    let train_config = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        loss_spec: cfg.run_loss_spec(),
        seed: cfg.train_seed,
        shuffle: cfg.shuffle,
    };
    let (model, _) = train(model, train_ds.training_view(), &train_config)?;
    harness::export_diagnostics(&model, &val_ds, cfg.representation_layer(), &cfg.output_dir)?;
    println!(
        "diagnostics for loss '{}' written to {} and {}",
        cfg.run_loss_spec().kind.as_str(),
        cfg.output_dir.join("histogram.csv").display(),
        cfg.output_dir.join("pca.tsv").display()
    );
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::GenData { common } => cmd_gen_data(common),
        Command::Train { common } => cmd_train(common),
        Command::Embed { common } => cmd_embed(common),
        Command::Cluster { common } => cmd_cluster(common),
        Command::Evaluate {
            truth,
            predicted,
            common,
        } => cmd_evaluate(truth, predicted, common),
        Command::RunExperiment { common } => cmd_run_experiment(common),
        Command::SweepK { common } => cmd_sweep_k(common),
        Command::Diagnostics { common } => cmd_diagnostics(common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version print through the error path with a
            // success status.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
