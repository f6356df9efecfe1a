//! Flat-dotted configuration schema.
//!
//! A config file is a JSON object whose keys come from the registry below,
//! e.g. `{"dataset.n_classes": 10, "loss.kind": "multi"}`. Values not
//! present fall back to defaults. `--set key=value` overrides parse the
//! value as JSON when possible and as a bare string otherwise. Unknown
//! keys are rejected with the full list of valid keys.
//!
//! The environment variable `DISENT_SEED_OVERRIDE` (an integer) replaces
//! every seed in the config, including the experiment seed list, for quick
//! smoke runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;

use disent_core::losses::{LossKind, LossSpec};
use disent_core::metrics::{AmiNormalization, NmiNormalization};
use disent_core::network::Activation;

use crate::error::{CliError, CliResult};

/// Environment variable that overrides every seed.
pub const SEED_OVERRIDE_ENV: &str = "DISENT_SEED_OVERRIDE";

struct KeyInfo {
    key: &'static str,
    default: fn() -> Value,
    help: &'static str,
}

macro_rules! keys {
    ($( $key:literal => $default:expr ; $help:literal ),* $(,)?) => {
        &[ $( KeyInfo { key: $key, default: || serde_json::json!($default), help: $help } ),* ]
    };
}

static REGISTRY: &[KeyInfo] = keys![
    "dataset.kind" => "blobs"; "dataset source: blobs | csv | idx",
    "dataset.n_per_class" => 100; "blobs: samples per fine class",
    "dataset.n_classes" => 10; "blobs: number of fine classes (even)",
    "dataset.dim" => 20; "blobs: feature dimension",
    "dataset.center_scale" => 1.0; "blobs: scale of the class centers",
    "dataset.noise_sigma" => 0.4; "blobs: per-sample noise scale",
    "dataset.seed" => 7; "blobs: generator seed",
    "dataset.csv_path" => ""; "csv: dataset file path",
    "dataset.idx_images" => ""; "idx: image file path",
    "dataset.idx_labels" => ""; "idx: label file path",
    "dataset.group_threshold" => -1; "fine classes below this go to group 0; -1 = half the classes",
    "split.train" => 0.8; "fraction of samples for training",
    "split.validation" => 0.1; "fraction of samples for validation",
    "split.test" => 0.1; "fraction of samples for testing",
    "split.seed" => 11; "shuffle seed for the split",
    "model.layer_sizes" => [20, 32, 10, 1]; "layer widths, input first",
    "model.activations" => ["relu", "relu", "sigmoid"]; "per-layer activations: relu | tanh | sigmoid | identity",
    "model.path" => ""; "model JSON path for embed; empty = <output.dir>/model.json",
    "train.epochs" => 600; "training epochs",
    "train.batch_size" => 128; "mini-batch size",
    "train.learning_rate" => 0.01; "Adam learning rate",
    "train.seed" => 1; "seed for init and shuffling in single-model runs",
    "train.shuffle" => true; "reshuffle batches every epoch",
    "loss.kind" => "none"; "auxiliary loss for single-model runs: none | single | multi | multi2 | decov | xcov",
    "loss.margin" => 0.5; "margin for single-model runs",
    "loss.weight" => 1.0; "auxiliary weight for single-model runs",
    "loss.target_layer" => -1; "layer the auxiliary loss attaches to; -1 = penultimate",
    "loss.single.margin" => 5.0; "margin used by the 'single' method in experiments",
    "loss.single.weight" => 1.0; "weight of the 'single' method",
    "loss.multi.margin" => 0.5; "margin used by the 'multi' method",
    "loss.multi.weight" => 1.0; "weight of the 'multi' method",
    "loss.multi2.margin" => 0.5; "margin used by the 'multi2' method",
    "loss.multi2.weight" => 1.0; "weight of the 'multi2' method",
    "loss.decov.weight" => 1.0; "weight of the 'decov' method",
    "loss.xcov.weight" => 1.0; "weight of the 'xcov' method",
    "cluster.k" => 10; "number of clusters",
    "cluster.n_init" => 10; "kmeans restarts",
    "cluster.max_iter" => 300; "kmeans iteration cap",
    "cluster.tol" => 1e-6; "kmeans centroid-movement tolerance",
    "cluster.seed" => 17; "kmeans seed",
    "cluster.input" => ""; "embeddings CSV for the cluster subcommand; empty = <output.dir>/embeddings.csv",
    "experiment.methods" => ["baseline", "single", "multi", "decov", "xcov"]; "methods compared by run-experiment and sweep-k",
    "experiment.seeds" => [1, 2, 3]; "training seeds; each method trains once per seed",
    "embed.layer" => -1; "representation layer; -1 = penultimate",
    "sweep.k_min" => 2; "smallest k in the cluster sweep",
    "sweep.k_max" => 20; "largest k in the cluster sweep",
    "metrics.ami_normalization" => "max"; "AMI normalization: max | arithmetic",
    "metrics.nmi_normalization" => "geometric"; "NMI normalization: geometric | arithmetic | max",
    "output.dir" => "out"; "directory for all generated files",
];

fn known_keys() -> Vec<&'static str> {
    REGISTRY.iter().map(|k| k.key).collect()
}

fn unknown_key_error(key: &str) -> CliError {
    CliError::Validation(format!(
        "unknown config key '{key}'; valid keys are: {}",
        known_keys().join(", ")
    ))
}

/// The merged flat key/value view of a run's configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatConfig {
    values: BTreeMap<String, Value>,
}

impl Default for FlatConfig {
    fn default() -> Self {
        let values = REGISTRY
            .iter()
            .map(|k| (k.key.to_string(), (k.default)()))
            .collect();
        Self { values }
    }
}

impl FlatConfig {
    /// Defaults merged with a JSON config file.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let mut config = Self::default();
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let parsed: Value = serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("config {} is not valid JSON: {e}", path.display()))
        })?;
        let object = parsed.as_object().ok_or_else(|| {
            CliError::Validation(format!(
                "config {} must be a JSON object of dotted keys",
                path.display()
            ))
        })?;
        for (key, value) in object {
            config.set_value(key, value.clone())?;
        }
        Ok(config)
    }

    fn set_value(&mut self, key: &str, value: Value) -> CliResult<()> {
        if !self.values.contains_key(key) {
            return Err(unknown_key_error(key));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    /// Applies one `--set key=value` override. The value is parsed as JSON
    /// when possible, otherwise taken as a string.
    pub fn apply_set(&mut self, assignment: &str) -> CliResult<()> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| {
            CliError::Validation(format!(
                "--set expects key=value, got '{assignment}'"
            ))
        })?;
        let value = serde_json::from_str::<Value>(raw)
            .unwrap_or_else(|_| Value::String(raw.to_string()));
        self.set_value(key.trim(), value)
    }

    /// Applies the `DISENT_SEED_OVERRIDE` environment variable if present.
    pub fn apply_env_override(&mut self) -> CliResult<()> {
        let Ok(raw) = std::env::var(SEED_OVERRIDE_ENV) else {
            return Ok(());
        };
        let seed: u64 = raw.parse().map_err(|_| {
            CliError::Validation(format!(
                "{SEED_OVERRIDE_ENV} must be a non-negative integer, got '{raw}'"
            ))
        })?;
        for key in ["dataset.seed", "split.seed", "train.seed", "cluster.seed"] {
            self.values.insert(key.into(), serde_json::json!(seed));
        }
        self.values
            .insert("experiment.seeds".into(), serde_json::json!([seed]));
        Ok(())
    }

    /// The full key/value map, for provenance echoes.
    pub fn echo(&self) -> BTreeMap<String, Value> {
        self.values.clone()
    }

    /// One help line per key, for `--help`.
    pub fn help_text() -> String {
        let mut lines = vec!["Config keys (JSON file and --set overrides):".to_string()];
        for info in REGISTRY {
            let default = (info.default)();
            lines.push(format!("  {:<28} {} [default: {}]", info.key, info.help, default));
        }
        lines.join("\n")
    }

    // --- typed getters ---

    fn get(&self, key: &str) -> CliResult<&Value> {
        self.values
            .get(key)
            .ok_or_else(|| unknown_key_error(key))
    }

    pub fn get_string(&self, key: &str) -> CliResult<String> {
        self.get(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| CliError::Validation(format!("config key '{key}' must be a string")))
    }

    pub fn get_bool(&self, key: &str) -> CliResult<bool> {
        self.get(key)?
            .as_bool()
            .ok_or_else(|| CliError::Validation(format!("config key '{key}' must be a boolean")))
    }

    pub fn get_f64(&self, key: &str) -> CliResult<f64> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| CliError::Validation(format!("config key '{key}' must be a number")))
    }

    pub fn get_usize(&self, key: &str) -> CliResult<usize> {
        self.get(key)?
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| {
                CliError::Validation(format!("config key '{key}' must be a non-negative integer"))
            })
    }

    pub fn get_u64(&self, key: &str) -> CliResult<u64> {
        self.get(key)?.as_u64().ok_or_else(|| {
            CliError::Validation(format!("config key '{key}' must be a non-negative integer"))
        })
    }

    /// Integer keys that accept -1 as "automatic".
    pub fn get_auto_index(&self, key: &str) -> CliResult<Option<usize>> {
        let v = self.get(key)?.as_i64().ok_or_else(|| {
            CliError::Validation(format!("config key '{key}' must be an integer"))
        })?;
        if v < 0 {
            Ok(None)
        } else {
            Ok(Some(v as usize))
        }
    }

    pub fn get_usize_list(&self, key: &str) -> CliResult<Vec<usize>> {
        let arr = self.get(key)?.as_array().ok_or_else(|| {
            CliError::Validation(format!("config key '{key}' must be an array"))
        })?;
        arr.iter()
            .map(|v| {
                v.as_u64().map(|x| x as usize).ok_or_else(|| {
                    CliError::Validation(format!(
                        "config key '{key}' must contain non-negative integers"
                    ))
                })
            })
            .collect()
    }

    pub fn get_u64_list(&self, key: &str) -> CliResult<Vec<u64>> {
        let arr = self.get(key)?.as_array().ok_or_else(|| {
            CliError::Validation(format!("config key '{key}' must be an array"))
        })?;
        arr.iter()
            .map(|v| {
                v.as_u64().ok_or_else(|| {
                    CliError::Validation(format!(
                        "config key '{key}' must contain non-negative integers"
                    ))
                })
            })
            .collect()
    }

    pub fn get_string_list(&self, key: &str) -> CliResult<Vec<String>> {
        let arr = self.get(key)?.as_array().ok_or_else(|| {
            CliError::Validation(format!("config key '{key}' must be an array"))
        })?;
        arr.iter()
            .map(|v| {
                v.as_str().map(str::to_string).ok_or_else(|| {
                    CliError::Validation(format!("config key '{key}' must contain strings"))
                })
            })
            .collect()
    }

    /// Resolves into the validated typed configuration.
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        ExperimentConfig::from_flat(self)
    }
}

/// Where the dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Blobs {
        n_per_class: usize,
        n_classes: usize,
        dim: usize,
        center_scale: f64,
        noise_sigma: f64,
        seed: u64,
    },
    Csv {
        path: PathBuf,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    /// Fine classes below the threshold form group 0; None = half split.
    pub group_threshold: Option<usize>,
    pub split_fractions: (f64, f64, f64),
    pub split_seed: u64,
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub model_path: Option<PathBuf>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_seed: u64,
    pub shuffle: bool,
    /// Loss used by single-model subcommands (train, diagnostics).
    pub run_loss: RunLoss,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub cluster_k: usize,
    pub cluster_n_init: usize,
    pub cluster_max_iter: usize,
    pub cluster_tol: f64,
    pub cluster_seed: u64,
    pub cluster_input: Option<PathBuf>,
    pub embed_layer: Option<usize>,
    pub sweep_k_min: usize,
    pub sweep_k_max: usize,
    pub ami_norm: AmiNormalization,
    pub nmi_norm: NmiNormalization,
    pub output_dir: PathBuf,
    /// Per-method (margin, weight) table for experiments.
    method_params: BTreeMap<String, (f64, f64)>,
    pub target_layer: Option<usize>,
    echo: BTreeMap<String, Value>,
}

/// Loss parameters for single-model runs.
#[derive(Debug, Clone, Copy)]
pub struct RunLoss {
    pub kind: LossKind,
    pub margin: f64,
    pub weight: f64,
}

impl ExperimentConfig {
    fn from_flat(flat: &FlatConfig) -> CliResult<Self> {
        let dataset = match flat.get_string("dataset.kind")?.as_str() {
            "blobs" => DatasetSpec::Blobs {
                n_per_class: flat.get_usize("dataset.n_per_class")?,
                n_classes: flat.get_usize("dataset.n_classes")?,
                dim: flat.get_usize("dataset.dim")?,
                center_scale: flat.get_f64("dataset.center_scale")?,
                noise_sigma: flat.get_f64("dataset.noise_sigma")?,
                seed: flat.get_u64("dataset.seed")?,
            },
            "csv" => {
                let path = flat.get_string("dataset.csv_path")?;
                if path.is_empty() {
                    return Err(CliError::Validation(
                        "dataset.kind=csv requires dataset.csv_path".into(),
                    ));
                }
                DatasetSpec::Csv { path: path.into() }
            }
            "idx" => {
                let images = flat.get_string("dataset.idx_images")?;
                let labels = flat.get_string("dataset.idx_labels")?;
                if images.is_empty() || labels.is_empty() {
                    return Err(CliError::Validation(
                        "dataset.kind=idx requires dataset.idx_images and dataset.idx_labels"
                            .into(),
                    ));
                }
                DatasetSpec::Idx {
                    images: images.into(),
                    labels: labels.into(),
                }
            }
            other => {
                return Err(CliError::Validation(format!(
                    "dataset.kind must be blobs|csv|idx, got '{other}'"
                )))
            }
        };

        let layer_sizes = flat.get_usize_list("model.layer_sizes")?;
        if layer_sizes.len() < 2 {
            return Err(CliError::Validation(
                "model.layer_sizes needs at least input and output sizes".into(),
            ));
        }
        let activations = flat
            .get_string_list("model.activations")?
            .iter()
            .map(|s| Activation::parse(s).map_err(CliError::from))
            .collect::<CliResult<Vec<_>>>()?;
        if activations.len() != layer_sizes.len() - 1 {
            return Err(CliError::Validation(format!(
                "model.activations must list {} entries for {} layer sizes",
                layer_sizes.len() - 1,
                layer_sizes.len()
            )));
        }

        let run_loss = RunLoss {
            kind: LossKind::parse(&flat.get_string("loss.kind")?)?,
            margin: flat.get_f64("loss.margin")?,
            weight: flat.get_f64("loss.weight")?,
        };

        let methods = flat.get_string_list("experiment.methods")?;
        if methods.is_empty() {
            return Err(CliError::Validation(
                "experiment.methods must list at least one method".into(),
            ));
        }
        let mut method_params = BTreeMap::new();
        for method in &methods {
            let (margin, weight) = match method.as_str() {
                "baseline" | "none" => (0.0, 0.0),
                "single" => (
                    flat.get_f64("loss.single.margin")?,
                    flat.get_f64("loss.single.weight")?,
                ),
                "multi" => (
                    flat.get_f64("loss.multi.margin")?,
                    flat.get_f64("loss.multi.weight")?,
                ),
                "multi2" => (
                    flat.get_f64("loss.multi2.margin")?,
                    flat.get_f64("loss.multi2.weight")?,
                ),
                "decov" => (0.0, flat.get_f64("loss.decov.weight")?),
                "xcov" => (0.0, flat.get_f64("loss.xcov.weight")?),
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown method '{other}' in experiment.methods"
                    )))
                }
            };
            method_params.insert(method.clone(), (margin, weight));
        }

        let seeds = flat.get_u64_list("experiment.seeds")?;
        if seeds.is_empty() {
            return Err(CliError::Validation(
                "experiment.seeds must list at least one seed".into(),
            ));
        }

        let cluster_k = flat.get_usize("cluster.k")?;
        if cluster_k < 2 {
            return Err(CliError::Validation("cluster.k must be >= 2".into()));
        }

        let sweep_k_min = flat.get_usize("sweep.k_min")?;
        let sweep_k_max = flat.get_usize("sweep.k_max")?;
        if sweep_k_min < 2 || sweep_k_min > sweep_k_max {
            return Err(CliError::Validation(format!(
                "sweep range [{sweep_k_min}, {sweep_k_max}] must satisfy 2 <= k_min <= k_max"
            )));
        }

        let model_path = match flat.get_string("model.path")?.as_str() {
            "" => None,
            p => Some(PathBuf::from(p)),
        };
        let cluster_input = match flat.get_string("cluster.input")?.as_str() {
            "" => None,
            p => Some(PathBuf::from(p)),
        };

        let config = Self {
            dataset,
            group_threshold: flat.get_auto_index("dataset.group_threshold")?,
            split_fractions: (
                flat.get_f64("split.train")?,
                flat.get_f64("split.validation")?,
                flat.get_f64("split.test")?,
            ),
            split_seed: flat.get_u64("split.seed")?,
            layer_sizes,
            activations,
            model_path,
            epochs: flat.get_usize("train.epochs")?,
            batch_size: flat.get_usize("train.batch_size")?,
            learning_rate: flat.get_f64("train.learning_rate")?,
            train_seed: flat.get_u64("train.seed")?,
            shuffle: flat.get_bool("train.shuffle")?,
            run_loss,
            methods,
            seeds,
            cluster_k,
            cluster_n_init: flat.get_usize("cluster.n_init")?,
            cluster_max_iter: flat.get_usize("cluster.max_iter")?,
            cluster_tol: flat.get_f64("cluster.tol")?,
            cluster_seed: flat.get_u64("cluster.seed")?,
            cluster_input,
            embed_layer: flat.get_auto_index("embed.layer")?,
            sweep_k_min,
            sweep_k_max,
            ami_norm: AmiNormalization::parse(&flat.get_string("metrics.ami_normalization")?)?,
            nmi_norm: NmiNormalization::parse(&flat.get_string("metrics.nmi_normalization")?)?,
            output_dir: PathBuf::from(flat.get_string("output.dir")?),
            method_params,
            target_layer: flat.get_auto_index("loss.target_layer")?,
            echo: flat.echo(),
        };
        Ok(config)
    }

    /// Number of model layers (weight blocks).
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// The representation layer: configured index or the penultimate.
    pub fn representation_layer(&self) -> usize {
        self.embed_layer.unwrap_or(self.depth().saturating_sub(2))
    }

    /// Resolved auxiliary layer for losses.
    pub fn auxiliary_layer(&self) -> usize {
        self.target_layer.unwrap_or(self.depth().saturating_sub(2))
    }

    /// Loss spec for a named experiment method.
    pub fn method_loss_spec(&self, method: &str) -> CliResult<LossSpec> {
        let (margin, weight) = self.method_params.get(method).copied().ok_or_else(|| {
            CliError::Validation(format!("method '{method}' is not configured"))
        })?;
        let kind = match method {
            "baseline" | "none" => LossKind::None,
            other => LossKind::parse(other)?,
        };
        Ok(LossSpec::new(kind, margin, weight, self.auxiliary_layer()))
    }

    /// Loss spec for single-model subcommands.
    pub fn run_loss_spec(&self) -> LossSpec {
        LossSpec::new(
            self.run_loss.kind,
            self.run_loss.margin,
            self.run_loss.weight,
            self.auxiliary_layer(),
        )
    }

    /// Provenance echo of every key.
    pub fn echo(&self) -> &BTreeMap<String, Value> {
        &self.echo
    }

    pub fn model_path_or_default(&self) -> PathBuf {
        self.model_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("model.json"))
    }

    pub fn cluster_input_or_default(&self) -> PathBuf {
        self.cluster_input
            .clone()
            .unwrap_or_else(|| self.output_dir.join("embeddings.csv"))
    }
}
