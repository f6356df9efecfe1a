//! Experiment report structures and their CSV/JSON serializations.
//!
//! All files are written atomically (temp file in the target directory,
//! then rename). CSV payloads contain no timestamps, so identical runs
//! produce byte-identical files; the JSON report carries the timestamp in
//! its provenance block.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// One method x seed x split measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub method: String,
    pub seed: u64,
    pub split: String,
    pub ami: f64,
    pub nmi: f64,
    pub train_acc: f64,
}

/// Per-cell representation diagnostics, measured on the validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub method: String,
    pub seed: u64,
    /// Neurons that are the argmax for at least 5% of validation samples.
    pub active_neurons_validation: usize,
}

/// Mean and sample standard deviation over seeds, per method and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub split: String,
    pub ami_mean: f64,
    pub ami_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub train_acc_mean: f64,
    pub train_acc_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: BTreeMap<String, Value>,
    pub code_version: String,
    pub timestamp_utc: String,
}

/// The full outcome of `run-experiment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub rows: Vec<SeedRow>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// One row of the cluster-count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub seed: u64,
    pub k: usize,
    pub ami: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Aggregates per-seed rows into means and sample standard deviations,
/// preserving the method order of first appearance.
pub fn aggregate_rows(rows: &[SeedRow]) -> Vec<AggregateRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    for row in rows {
        let key = (row.method.clone(), row.split.clone());
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|(method, split)| {
            let group: Vec<&SeedRow> = rows
                .iter()
                .filter(|r| r.method == method && r.split == split)
                .collect();
            let ami: Vec<f64> = group.iter().map(|r| r.ami).collect();
            let nmi: Vec<f64> = group.iter().map(|r| r.nmi).collect();
            let acc: Vec<f64> = group.iter().map(|r| r.train_acc).collect();
            AggregateRow {
                method,
                split,
                ami_mean: mean(&ami),
                ami_std: sample_std(&ami),
                nmi_mean: mean(&nmi),
                nmi_std: sample_std(&nmi),
                train_acc_mean: mean(&acc),
                train_acc_std: sample_std(&acc),
            }
        })
        .collect()
}

/// Writes `content` to `path` atomically: temp file in the same directory,
/// flushed, then renamed over the target.
pub fn atomic_write(path: &Path, content: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(
        || Path::new(".").to_path_buf(),
        Path::to_path_buf,
    );
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(content)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

impl ExperimentReport {
    /// `method,seed,split,ami,nmi,train_acc` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,seed,split,ami,nmi,train_acc\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.method, row.seed, row.split, row.ami, row.nmi, row.train_acc
            ));
        }
        out
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<()> {
        atomic_write(&out_dir.join("report.csv"), self.to_csv().as_bytes())?;
        let json = serde_json::to_string_pretty(self)?;
        atomic_write(&out_dir.join("report.json"), json.as_bytes())?;
        Ok(())
    }
}

/// `method,seed,k,ami` rows.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("method,seed,k,ami\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.method, row.seed, row.k, row.ami
        ));
    }
    out
}
