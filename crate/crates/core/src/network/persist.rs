//! Versioned JSON model persistence.
//!
//! The document layout is `{format_version, layer_sizes, activations,
//! weights, biases, seed}` with weights as nested row-major arrays. Keys
//! serialize in declaration order and numbers round-trip exactly for
//! double precision.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

use super::{Activation, Layer, MlpModel};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    layer_sizes: Vec<usize>,
    activations: Vec<String>,
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
    seed: u64,
}

/// Serializes a model to pretty-printed JSON.
pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    let doc = ModelDocument {
        format_version: FORMAT_VERSION,
        layer_sizes: model.layer_sizes(),
        activations: model
            .layers
            .iter()
            .map(|l| l.activation.as_str().to_string())
            .collect(),
        weights: model
            .layers
            .iter()
            .map(|l| {
                (0..l.weights.rows())
                    .map(|r| l.weights.row(r).to_vec())
                    .collect()
            })
            .collect(),
        biases: model.layers.iter().map(|l| l.biases.clone()).collect(),
        seed: model.seed,
    };
    let json = serde_json::to_string_pretty(&doc)?;
    fs::write(path, json)?;
    Ok(())
}

/// Loads a model saved by [`save_model`], checking version and shapes.
pub fn load_model(path: &Path) -> Result<MlpModel> {
    let text = fs::read_to_string(path)?;
    let doc: ModelDocument = serde_json::from_str(&text)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {} (expected {FORMAT_VERSION})",
            doc.format_version
        )));
    }
    let transitions = doc.layer_sizes.len().saturating_sub(1);
    if doc.activations.len() != transitions
        || doc.weights.len() != transitions
        || doc.biases.len() != transitions
    {
        return Err(Error::Format(format!(
            "layer_sizes implies {transitions} layers but got {} activations, {} weight blocks, {} bias blocks",
            doc.activations.len(),
            doc.weights.len(),
            doc.biases.len()
        )));
    }
    let mut layers = Vec::with_capacity(transitions);
    for l in 0..transitions {
        let fan_in = doc.layer_sizes[l];
        let fan_out = doc.layer_sizes[l + 1];
        let rows = &doc.weights[l];
        if rows.len() != fan_out || rows.iter().any(|r| r.len() != fan_in) {
            return Err(Error::Format(format!(
                "layer {l} weights are not {fan_out}x{fan_in}"
            )));
        }
        if doc.biases[l].len() != fan_out {
            return Err(Error::Format(format!(
                "layer {l} biases are not length {fan_out}"
            )));
        }
        layers.push(Layer {
            weights: DenseMatrix::from_rows(rows)?,
            biases: doc.biases[l].clone(),
            activation: Activation::parse(&doc.activations[l])?,
        });
    }
    Ok(MlpModel {
        layers,
        seed: doc.seed,
    })
}
