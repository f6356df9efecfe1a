//! Adam optimizer with bias-corrected moment estimates.

use crate::error::{Error, Result};

use super::{Gradients, MlpModel};

/// First and second moment accumulators, shaped like the model parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub step: u64,
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl AdamState {
    /// Fresh state for `model` with the standard constants
    /// (beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8).
    pub fn new(model: &MlpModel, learning_rate: f64) -> Self {
        let m_weights: Vec<Vec<f64>> = model
            .layers
            .iter()
            .map(|l| vec![0.0; l.weights.as_slice().len()])
            .collect();
        let m_biases: Vec<Vec<f64>> = model
            .layers
            .iter()
            .map(|l| vec![0.0; l.biases.len()])
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            learning_rate,
            step: 0,
            v_weights: m_weights.clone(),
            v_biases: m_biases.clone(),
            m_weights,
            m_biases,
        }
    }
}

fn update_block(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    state_step: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
) {
    let bias1 = 1.0 - beta1.powi(state_step as i32);
    let bias2 = 1.0 - beta2.powi(state_step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

/// One Adam step over all model parameters. Errors on non-finite gradients.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.weights.len() != model.layers.len() || grads.biases.len() != model.layers.len() {
        return Err(Error::ShapeMismatch(
            "gradient structure does not match the model".into(),
        ));
    }
    for (gw, gb) in grads.weights.iter().zip(&grads.biases) {
        if !gw.is_finite() || gb.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingDiverged {
                epoch: 0,
                detail: "non-finite gradient in optimizer step".into(),
            });
        }
    }
    state.step += 1;
    for (l, layer) in model.layers.iter_mut().enumerate() {
        update_block(
            layer.weights.as_mut_slice(),
            grads.weights[l].as_slice(),
            &mut state.m_weights[l],
            &mut state.v_weights[l],
            state.step,
            state.beta1,
            state.beta2,
            state.epsilon,
            state.learning_rate,
        );
        update_block(
            &mut layer.biases,
            grads.biases[l].as_slice(),
            &mut state.m_biases[l],
            &mut state.v_biases[l],
            state.step,
            state.beta1,
            state.beta2,
            state.epsilon,
            state.learning_rate,
        );
    }
    Ok(())
}
