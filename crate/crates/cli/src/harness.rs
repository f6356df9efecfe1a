//! Experiment orchestration: dataset preparation, train/embed/cluster/score
//! pipelines with seed repetition, the cluster-count sweep, and diagnostic
//! exports.

use std::path::Path;

use rayon::prelude::*;

use disent_core::clustering::{kmeans, KmeansParams};
use disent_core::data::{
    apply_grouping, gen_blobs, load_csv, load_idx, split, GroupMapping, LabeledDataset,
};
use disent_core::metrics::{active_neuron_count, activation_histogram, ami, nmi};
use disent_core::network::{embed, init_model, train, MlpModel, TrainConfig, TrainLog};
use disent_core::numerics::{pca_project, DenseMatrix};

use crate::config::{DatasetSpec, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::report::{
    aggregate_rows, atomic_write, DiagnosticRow, ExperimentReport, Provenance, SeedRow, SweepRow,
};

/// Builds the configured dataset and applies the group mapping.
pub fn prepare_dataset(cfg: &ExperimentConfig) -> CliResult<LabeledDataset> {
    let ds = match &cfg.dataset {
        DatasetSpec::Blobs {
            n_per_class,
            n_classes,
            dim,
            center_scale,
            noise_sigma,
            seed,
        } => gen_blobs(
            *n_per_class,
            *n_classes,
            *dim,
            *center_scale,
            *noise_sigma,
            *seed,
        )?,
        DatasetSpec::Csv { path } => load_csv(path)?,
        DatasetSpec::Idx { images, labels } => load_idx(images, labels)?,
    };
    let threshold = cfg.group_threshold.unwrap_or_else(|| {
        let max_label = ds.fine_labels.iter().copied().max().unwrap_or(0);
        max_label.div_ceil(2)
    });
    Ok(apply_grouping(&ds, &GroupMapping::Threshold(threshold))?)
}

/// Dataset split into train/validation/test per the config.
pub fn prepare_splits(
    cfg: &ExperimentConfig,
) -> CliResult<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let ds = prepare_dataset(cfg)?;
    Ok(split(&ds, cfg.split_fractions, cfg.split_seed)?)
}

/// Trains one model for `method` with `seed`.
pub fn train_cell(
    cfg: &ExperimentConfig,
    method: &str,
    seed: u64,
    train_ds: &LabeledDataset,
) -> CliResult<(MlpModel, TrainLog)> {
    let loss_spec = cfg.method_loss_spec(method)?;
    let model = init_model(&cfg.layer_sizes, &cfg.activations, seed)?;
    let train_config = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        loss_spec,
        seed,
        shuffle: cfg.shuffle,
    };
    Ok(train(model, train_ds.training_view(), &train_config)?)
}

/// Embeds a dataset at the configured representation layer, clusters with
/// `k`, and scores against the fine labels.
pub fn score_embedding(
    cfg: &ExperimentConfig,
    model: &MlpModel,
    ds: &LabeledDataset,
    k: usize,
) -> CliResult<(f64, f64)> {
    let layer = cfg.representation_layer();
    let representation = embed(model, &ds.features, layer)?;
    let clustering = kmeans(
        &representation,
        &KmeansParams {
            k,
            n_init: cfg.cluster_n_init,
            max_iter: cfg.cluster_max_iter,
            tol: cfg.cluster_tol,
            seed: cfg.cluster_seed,
        },
    )?;
    let ami_score = ami(&ds.fine_labels, &clustering.assignments, cfg.ami_norm)?;
    let nmi_score = nmi(&ds.fine_labels, &clustering.assignments, cfg.nmi_norm)?;
    Ok((ami_score, nmi_score))
}

fn provenance(cfg: &ExperimentConfig) -> Provenance {
    Provenance {
        config: cfg.echo().clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_utc: chrono::Utc::now().to_rfc3339(),
    }
}

struct CellOutcome {
    rows: Vec<SeedRow>,
    diagnostic: DiagnosticRow,
}

fn run_cell(
    cfg: &ExperimentConfig,
    method: &str,
    seed: u64,
    train_ds: &LabeledDataset,
    val_ds: &LabeledDataset,
    test_ds: &LabeledDataset,
) -> CliResult<CellOutcome> {
    let (model, log) = train_cell(cfg, method, seed, train_ds)?;
    let train_acc = log.final_accuracy();
    let (val_ami, val_nmi) = score_embedding(cfg, &model, val_ds, cfg.cluster_k)?;
    let (test_ami, test_nmi) = score_embedding(cfg, &model, test_ds, cfg.cluster_k)?;

    let representation = embed(&model, &val_ds.features, cfg.representation_layer())?;
    let histogram = activation_histogram(&representation, &val_ds.fine_labels)?;
    let active = active_neuron_count(&histogram, 0.05);

    Ok(CellOutcome {
        rows: vec![
            SeedRow {
                method: method.to_string(),
                seed,
                split: "validation".into(),
                ami: val_ami,
                nmi: val_nmi,
                train_acc,
            },
            SeedRow {
                method: method.to_string(),
                seed,
                split: "test".into(),
                ami: test_ami,
                nmi: test_nmi,
                train_acc,
            },
        ],
        diagnostic: DiagnosticRow {
            method: method.to_string(),
            seed,
            active_neurons_validation: active,
        },
    })
}

/// Runs the full protocol: for each method x seed, train on group labels,
/// embed the representation layer on the validation and test splits,
/// cluster, and score AMI/NMI against the fine labels. Writes `report.csv`
/// and `report.json` into `out_dir`; on a cell failure the completed rows
/// are flushed before the error propagates.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<ExperimentReport> {
    let (train_ds, val_ds, test_ds) = prepare_splits(cfg)?;

    let cells: Vec<(usize, String, u64)> = cfg
        .methods
        .iter()
        .enumerate()
        .flat_map(|(mi, method)| {
            cfg.seeds
                .iter()
                .enumerate()
                .map(move |(si, &seed)| (mi * cfg.seeds.len() + si, method.clone(), seed))
        })
        .collect();

    // Cells are independent; run them in parallel and reassemble in cell
    // order so the report does not depend on scheduling.
    let mut outcomes: Vec<(usize, String, u64, CliResult<CellOutcome>)> = cells
        .par_iter()
        .map(|(idx, method, seed)| {
            let outcome = run_cell(cfg, method, *seed, &train_ds, &val_ds, &test_ds);
            (*idx, method.clone(), *seed, outcome)
        })
        .collect();
    outcomes.sort_by_key(|(idx, _, _, _)| *idx);

    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut first_error: Option<CliError> = None;
    for (_, method, seed, outcome) in outcomes {
        match outcome {
            Ok(cell) => {
                rows.extend(cell.rows);
                diagnostics.push(cell.diagnostic);
            }
            Err(err) => {
                if first_error.is_none() {
                    first_error =
                        Some(err.with_context(&format!("method '{method}' seed {seed}")));
                }
            }
        }
    }

    let report = ExperimentReport {
        provenance: provenance(cfg),
        aggregates: aggregate_rows(&rows),
        rows,
        diagnostics,
    };
    // Flush whatever completed even when a cell failed.
    report.write(out_dir)?;
    match first_error {
        Some(err) => Err(err),
        None => Ok(report),
    }
}

/// Reruns the clustering of trained models across `k` in
/// `[cfg.sweep_k_min, cfg.sweep_k_max]`, reusing one trained model per
/// method x seed, scoring the validation split. Writes `sweep.csv`.
pub fn sweep_k(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<Vec<SweepRow>> {
    let (train_ds, val_ds, _) = prepare_splits(cfg)?;
    if cfg.sweep_k_max > val_ds.len() {
        return Err(CliError::Validation(format!(
            "sweep.k_max = {} exceeds the {} validation samples",
            cfg.sweep_k_max,
            val_ds.len()
        )));
    }

    let cells: Vec<(usize, String, u64)> = cfg
        .methods
        .iter()
        .enumerate()
        .flat_map(|(mi, method)| {
            cfg.seeds
                .iter()
                .enumerate()
                .map(move |(si, &seed)| (mi * cfg.seeds.len() + si, method.clone(), seed))
        })
        .collect();

    let mut partials: Vec<(usize, CliResult<Vec<SweepRow>>)> = cells
        .par_iter()
        .map(|(idx, method, seed)| {
            let result = (|| -> CliResult<Vec<SweepRow>> {
                let (model, _) = train_cell(cfg, method, *seed, &train_ds)?;
                let mut rows = Vec::new();
                for k in cfg.sweep_k_min..=cfg.sweep_k_max {
                    let (ami_score, _) = score_embedding(cfg, &model, &val_ds, k)?;
                    rows.push(SweepRow {
                        method: method.clone(),
                        seed: *seed,
                        k,
                        ami: ami_score,
                    });
                }
                Ok(rows)
            })()
            .map_err(|e| e.with_context(&format!("method '{method}' seed {seed}")));
            (*idx, result)
        })
        .collect();
    partials.sort_by_key(|(idx, _)| *idx);

    let mut rows = Vec::new();
    for (_, partial) in partials {
        rows.extend(partial?);
    }
    atomic_write(
        &out_dir.join("sweep.csv"),
        crate::report::sweep_csv(&rows).as_bytes(),
    )?;
    Ok(rows)
}

/// Diagnostic exports for one trained model on one dataset:
/// `histogram.csv` (`class,neuron,count` argmax-activation counts) and
/// `pca.tsv` (`pc1 pc2 fine_label group_label`, two principal components
/// of the representation).
pub fn export_diagnostics(
    model: &MlpModel,
    ds: &LabeledDataset,
    layer: usize,
    out_dir: &Path,
) -> CliResult<(Vec<Vec<u64>>, DenseMatrix)> {
    let representation = embed(model, &ds.features, layer)?;
    let histogram = activation_histogram(&representation, &ds.fine_labels)?;

    let mut hist_csv = String::from("class,neuron,count\n");
    for (class, row) in histogram.iter().enumerate() {
        for (neuron, &count) in row.iter().enumerate() {
            hist_csv.push_str(&format!("{class},{neuron},{count}\n"));
        }
    }
    atomic_write(&out_dir.join("histogram.csv"), hist_csv.as_bytes())?;

    let (_, projected) = pca_project(&representation, 2.min(representation.cols()))?;
    let mut pca_tsv = String::from("pc1\tpc2\tfine_label\tgroup_label\n");
    for i in 0..projected.rows() {
        let pc1 = projected.get(i, 0);
        let pc2 = if projected.cols() > 1 {
            projected.get(i, 1)
        } else {
            0.0
        };
        pca_tsv.push_str(&format!(
            "{pc1}\t{pc2}\t{}\t{}\n",
            ds.fine_labels[i], ds.group_labels[i]
        ));
    }
    atomic_write(&out_dir.join("pca.tsv"), pca_tsv.as_bytes())?;
    Ok((histogram, projected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FlatConfig;

    fn tiny_config(out: &Path) -> ExperimentConfig {
        let mut flat = FlatConfig::default();
        for setting in [
            "dataset.n_per_class=20",
            "dataset.n_classes=4",
            "dataset.dim=6",
            "model.layer_sizes=[6,12,6,1]",
            "train.epochs=15",
            "train.batch_size=32",
            "experiment.methods=[\"baseline\",\"multi\"]",
            "experiment.seeds=[1,2]",
            "cluster.k=4",
            "cluster.n_init=3",
            "sweep.k_min=2",
            "sweep.k_max=4",
        ] {
            flat.apply_set(setting).unwrap();
        }
        flat.apply_set(&format!("output.dir={}", out.display()))
            .unwrap();
        flat.resolve().unwrap()
    }

    #[test]
    fn experiment_report_structure_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let report = run_experiment(&cfg, dir.path()).unwrap();
        // 2 methods x 2 seeds x 2 splits.
        assert_eq!(report.rows.len(), 8);
        assert_eq!(report.diagnostics.len(), 4);
        assert_eq!(report.aggregates.len(), 4);
        assert!(dir.path().join("report.csv").exists());
        assert!(dir.path().join("report.json").exists());

        let csv1 = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        let report2 = run_experiment(&cfg, dir.path()).unwrap();
        let csv2 = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert_eq!(csv1, csv2);
        assert_eq!(report.rows, report2.rows);
        // Reports differ only in their timestamps.
        assert_eq!(report.aggregates, report2.aggregates);
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let report = run_experiment(&cfg, dir.path()).unwrap();
        let recomputed = aggregate_rows(&report.rows);
        assert_eq!(report.aggregates, recomputed);
        for agg in &report.aggregates {
            let manual: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.method == agg.method && r.split == agg.split)
                .map(|r| r.ami)
                .collect();
            let mean = manual.iter().sum::<f64>() / manual.len() as f64;
            assert!((agg.ami_mean - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_emits_full_grid() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let rows = sweep_k(&cfg, dir.path()).unwrap();
        // methods x seeds x k values = 2 x 2 x 3.
        assert_eq!(rows.len(), 12);
        let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert!(csv.starts_with("method,seed,k,ami\n"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn failing_cell_flushes_partial_results_with_context() {
        let dir = tempfile::tempdir().unwrap();
        let mut flat = FlatConfig::default();
        for setting in [
            "dataset.n_per_class=20",
            "dataset.n_classes=4",
            "dataset.dim=6",
            "model.layer_sizes=[6,8,4,1]",
            "train.epochs=3",
            "experiment.methods=[\"baseline\",\"multi\"]",
            "experiment.seeds=[1]",
            "cluster.k=4",
            "cluster.n_init=2",
            // Out of range for a 3-layer model: fails every cell whose
            // auxiliary loss is active, i.e. multi but not baseline.
            "loss.target_layer=99",
        ] {
            flat.apply_set(setting).unwrap();
        }
        let cfg = flat.resolve().unwrap();

        let err = run_experiment(&cfg, dir.path()).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("method 'multi' seed 1"), "{message}");

        // The baseline rows were flushed before the abort.
        let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(csv.lines().any(|l| l.starts_with("baseline,1,")), "{csv}");
        assert!(!csv.lines().any(|l| l.starts_with("multi,")), "{csv}");
    }

    #[test]
    fn diagnostics_files_are_consistent() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let (train_ds, val_ds, _) = prepare_splits(&cfg).unwrap();
        let (model, _) = train_cell(&cfg, "multi", 1, &train_ds).unwrap();
        let (histogram, projected) =
            export_diagnostics(&model, &val_ds, cfg.representation_layer(), dir.path()).unwrap();
        // Histogram row sums equal per-class counts.
        for (class, row) in histogram.iter().enumerate() {
            let count = val_ds
                .fine_labels
                .iter()
                .filter(|&&c| c == class)
                .count() as u64;
            assert_eq!(row.iter().sum::<u64>(), count);
        }
        assert_eq!(projected.rows(), val_ds.len());
        let pca_lines = std::fs::read_to_string(dir.path().join("pca.tsv")).unwrap();
        assert_eq!(pca_lines.lines().count(), val_ds.len() + 1);
    }
}
