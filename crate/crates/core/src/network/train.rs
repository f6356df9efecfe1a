//! Deterministic mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::numerics::DenseMatrix;

use super::{adam_step, auxiliary_value, backward, forward, AdamState, MlpModel};

/// The slice of a dataset that training is allowed to see: features and the
/// binary group labels. Fine class labels are structurally absent, so no
/// training path can read them.
#[derive(Debug, Clone, Copy)]
pub struct TrainingView<'a> {
    pub features: &'a DenseMatrix,
    pub group_labels: &'a [u8],
}

impl<'a> TrainingView<'a> {
    pub fn new(features: &'a DenseMatrix, group_labels: &'a [u8]) -> Result<Self> {
        if features.rows() != group_labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                group_labels.len()
            )));
        }
        if group_labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidInput(
                "group labels must be binary 0/1".into(),
            ));
        }
        Ok(Self {
            features,
            group_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.group_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_labels.is_empty()
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss_spec: LossSpec,
    pub seed: u64,
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        self.loss_spec.validate()
    }
}

/// Mean losses and accuracy over one epoch's batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub task_loss: f64,
    pub aux_loss: f64,
    pub train_accuracy: f64,
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.train_accuracy)
    }

    pub fn final_task_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.task_loss)
    }
}

fn batch_of(view: &TrainingView<'_>, indices: &[usize]) -> (DenseMatrix, Vec<u8>) {
    let d = view.features.cols();
    let mut data = Vec::with_capacity(indices.len() * d);
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        data.extend_from_slice(view.features.row(i));
        labels.push(view.group_labels[i]);
    }
    (
        DenseMatrix::from_vec(indices.len(), d, data).expect("batch shape by construction"),
        labels,
    )
}

/// Trains `model` on the binary group labels with mini-batch Adam,
/// injecting the configured auxiliary loss. Fully deterministic given the
/// config seed: shuffling comes from a dedicated ChaCha8 stream.
pub fn train(
    model: MlpModel,
    data: TrainingView<'_>,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if data.features.cols() != model.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "dataset has {} features but the model expects {}",
            data.features.cols(),
            model.input_dim()
        )));
    }
    if model.output_dim() != 1 {
        return Err(Error::InvalidConfig(
            "binary classification training needs a single output unit".into(),
        ));
    }
    let aux_active = config.loss_spec.kind != crate::losses::LossKind::None
        && config.loss_spec.weight != 0.0;
    if aux_active && config.loss_spec.target_layer >= model.depth() {
        return Err(Error::InvalidConfig(format!(
            "target layer {} out of range for a {}-layer model",
            config.loss_spec.target_layer,
            model.depth()
        )));
    }

    let n = data.len();
    let mut model = model;
    let mut state = AdamState::new(&model, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0xba7c4);

    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut task_sum = 0.0;
        let mut aux_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let (x, y) = batch_of(&data, chunk);
            let (yhat, trace) = forward(&model, &x)?;
            let task = crate::losses::loss_bce(&yhat, &y)?;
            let aux = auxiliary_value(&model, &trace, &y, &config.loss_spec)?;
            let total = task.value + config.loss_spec.weight * aux;
            if !total.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch,
                    detail: format!("batch loss became {total}"),
                });
            }
            task_sum += task.value * chunk.len() as f64;
            aux_sum += aux * chunk.len() as f64;
            for (i, &label) in y.iter().enumerate() {
                let predicted = if yhat.get(i, 0) >= 0.5 { 1 } else { 0 };
                if predicted == label {
                    correct += 1;
                }
            }

            let grads = backward(&model, &trace, &y, &config.loss_spec)?;
            adam_step(&mut model, &grads, &mut state).map_err(|e| match e {
                Error::TrainingDiverged { detail, .. } => {
                    Error::TrainingDiverged { epoch, detail }
                }
                other => other,
            })?;
        }
        log.epochs.push(EpochStats {
            epoch,
            task_loss: task_sum / n as f64,
            aux_loss: aux_sum / n as f64,
            train_accuracy: correct as f64 / n as f64,
        });
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{LossKind, LossSpec};
    use crate::network::{init_model, Activation};
    use rand::Rng;

    /// Two 1-D blobs far apart: linearly separable by construction.
    fn two_blob_data(n_per: usize, seed: u64) -> (DenseMatrix, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per {
            let group = (i % 2) as u8;
            let center = if group == 0 { -2.0 } else { 2.0 };
            rows.push(vec![
                center + rng.gen_range(-0.3..0.3),
                -center + rng.gen_range(-0.3..0.3),
            ]);
            labels.push(group);
        }
        (DenseMatrix::from_rows(&rows).unwrap(), labels)
    }

    fn config(epochs: usize, batch_size: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size,
            learning_rate: 0.05,
            loss_spec: LossSpec::none(),
            seed: 1,
            shuffle: true,
        }
    }

    #[test]
    fn separable_blobs_reach_high_accuracy() {
        let (x, y) = two_blob_data(40, 3);
        let model = init_model(
            &[2, 8, 1],
            &[Activation::Relu, Activation::Sigmoid],
            5,
        )
        .unwrap();
        let view = TrainingView::new(&x, &y).unwrap();
        let (_, log) = train(model, view, &config(50, 16)).unwrap();
        assert!(
            log.final_accuracy() >= 0.99,
            "accuracy {}",
            log.final_accuracy()
        );
    }

    #[test]
    fn zero_epochs_rejected() {
        let (x, y) = two_blob_data(4, 3);
        let model = init_model(&[2, 1], &[Activation::Sigmoid], 5).unwrap();
        let view = TrainingView::new(&x, &y).unwrap();
        assert!(matches!(
            train(model, view, &config(0, 4)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = two_blob_data(20, 9);
        let view = TrainingView::new(&x, &y).unwrap();
        let run = || {
            let model = init_model(
                &[2, 6, 1],
                &[Activation::Tanh, Activation::Sigmoid],
                11,
            )
            .unwrap();
            train(model, view, &config(10, 8)).unwrap()
        };
        let (m1, log1) = run();
        let (m2, log2) = run();
        assert_eq!(m1, m2);
        assert_eq!(log1, log2);
    }

    #[test]
    fn task_loss_non_increasing_after_transients() {
        // Full-batch descent on separable data settles monotonically.
        let (x, y) = two_blob_data(30, 13);
        let view = TrainingView::new(&x, &y).unwrap();
        let model = init_model(
            &[2, 6, 1],
            &[Activation::Tanh, Activation::Sigmoid],
            17,
        )
        .unwrap();
        let mut cfg = config(40, 60);
        cfg.learning_rate = 0.02;
        let (_, log) = train(model, view, &cfg).unwrap();
        for w in log.epochs.windows(2).skip(5) {
            assert!(
                w[1].task_loss <= w[0].task_loss + 1e-9,
                "epoch {} loss {} rose above epoch {} loss {}",
                w[1].epoch,
                w[1].task_loss,
                w[0].epoch,
                w[0].task_loss
            );
        }
    }

    #[test]
    fn single_kind_leaves_non_target_params_matching_baseline_after_one_step() {
        let (x, y) = two_blob_data(10, 23);
        let view = TrainingView::new(&x, &y).unwrap();
        let init = init_model(
            &[2, 5, 4, 1],
            &[Activation::Relu, Activation::Tanh, Activation::Sigmoid],
            29,
        )
        .unwrap();

        let mut base_cfg = config(1, 100);
        base_cfg.shuffle = false;
        let (baseline, _) = train(init.clone(), view, &base_cfg).unwrap();

        let mut single_cfg = base_cfg.clone();
        single_cfg.loss_spec = LossSpec::new(LossKind::Single, 5.0, 1.0, 1);
        let (with_single, _) = train(init, view, &single_cfg).unwrap();

        for l in 0..3 {
            assert_eq!(baseline.layers[l].biases, with_single.layers[l].biases);
            if l != 1 {
                assert_eq!(baseline.layers[l].weights, with_single.layers[l].weights);
            }
        }
        assert_ne!(baseline.layers[1].weights, with_single.layers[1].weights);
    }

    #[test]
    fn training_view_rejects_non_binary_labels() {
        let x = DenseMatrix::zeros(2, 2);
        assert!(TrainingView::new(&x, &[0, 2]).is_err());
        assert!(TrainingView::new(&x, &[0]).is_err());
    }

    /// The training path takes a view that structurally lacks fine class
    /// labels; this builds one from raw arrays with no fine labels in
    /// sight.
    #[test]
    fn training_consumes_group_only_view() {
        let (x, y) = two_blob_data(10, 41);
        let view = TrainingView::new(&x, &y).unwrap();
        let model = init_model(&[2, 4, 1], &[Activation::Relu, Activation::Sigmoid], 43).unwrap();
        let (_, log) = train(model, view, &config(2, 8)).unwrap();
        assert_eq!(log.epochs.len(), 2);
    }

    #[test]
    fn covariance_penalties_tolerate_singleton_final_batch() {
        // 21 samples with batch size 4 leaves a final chunk of one sample.
        let (x, y) = two_blob_data(21, 47);
        let x = {
            let rows: Vec<Vec<f64>> = (0..21).map(|i| x.row(i).to_vec()).collect();
            DenseMatrix::from_rows(&rows).unwrap()
        };
        let y = &y[..21];
        let view = TrainingView::new(&x, y).unwrap();
        for kind in [LossKind::Decov, LossKind::Xcov] {
            let model =
                init_model(&[2, 5, 1], &[Activation::Tanh, Activation::Sigmoid], 53).unwrap();
            let mut cfg = config(2, 4);
            cfg.loss_spec = LossSpec::new(kind, 0.0, 1.0, 0);
            train(model, view, &cfg).unwrap();
        }
    }

    #[test]
    fn multi_loss_aux_value_is_recorded() {
        let (x, y) = two_blob_data(10, 31);
        let view = TrainingView::new(&x, &y).unwrap();
        let model = init_model(
            &[2, 6, 1],
            &[Activation::Relu, Activation::Sigmoid],
            37,
        )
        .unwrap();
        let mut cfg = config(3, 10);
        cfg.loss_spec = LossSpec::new(LossKind::Multi, 0.5, 1.0, 0);
        let (_, log) = train(model, view, &cfg).unwrap();
        assert!(log.epochs.iter().all(|e| e.aux_loss > 0.0));
    }
}
