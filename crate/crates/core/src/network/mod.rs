//! A minimal multi-layer perceptron with exact backpropagation and
//! auxiliary-loss injection.
//!
//! The total training objective is `BCE(yhat, y) + weight * auxiliary`,
//! where the auxiliary component is selected by a [`LossSpec`]. The
//! `single` component adds its gradient only to the target layer's weight
//! matrix; the activation-based components (`multi`, `multi2`, `decov`,
//! `xcov`) inject their gradient at the target layer's post-activation, so
//! it propagates through every earlier layer.

mod adam;
mod persist;
mod train;

pub use adam::{adam_step, AdamState};
pub use train::{train, EpochStats, TrainConfig, TrainLog, TrainingView};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{
    loss_bce, loss_decov, loss_multi, loss_multi_unlabeled, loss_single, loss_xcov, LossKind,
    LossSpec,
};
use crate::numerics::DenseMatrix;

/// Elementwise nonlinearity applied after each affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation '{other}' (expected relu|tanh|sigmoid|identity)"
            ))),
        }
    }

    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through pre-activation `z` and post-activation
    /// `a`. ReLU takes derivative 0 at exactly z = 0.
    fn derivative(&self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer: `out x in` weights, `out` biases, and the activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DenseMatrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// A feed-forward network plus the seed it was initialized from.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub seed: u64,
}

impl MlpModel {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// `[input, hidden..., output]` sizes.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(Layer::output_dim));
        sizes
    }

    /// Index of the layer whose output is the representation by default.
    pub fn penultimate_layer(&self) -> usize {
        self.depth().saturating_sub(2)
    }

    /// Total parameter count (weights plus biases).
    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }
}

/// Everything recorded during one forward pass: the input batch and each
/// layer's pre- and post-activations.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: DenseMatrix,
    pub pre_activations: Vec<DenseMatrix>,
    pub post_activations: Vec<DenseMatrix>,
}

impl ForwardTrace {
    /// Final layer output.
    pub fn output(&self) -> &DenseMatrix {
        self.post_activations
            .last()
            .expect("trace always has at least one layer")
    }
}

/// Per-layer parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model
                .layers
                .iter()
                .map(|l| DenseMatrix::zeros(l.output_dim(), l.input_dim()))
                .collect(),
            biases: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.output_dim()])
                .collect(),
        }
    }
}

pub(crate) fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Builds a model with uniform Glorot weights and zero biases from a
/// ChaCha8 generator seeded with `seed`. The same seed always produces a
/// bitwise-identical model.
pub fn init_model(layer_sizes: &[usize], activations: &[Activation], seed: u64) -> Result<MlpModel> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least input and output sizes, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.iter().any(|&s| s < 1) {
        return Err(Error::InvalidConfig(format!(
            "every layer size must be >= 1, got {layer_sizes:?}"
        )));
    }
    if activations.len() != layer_sizes.len() - 1 {
        return Err(Error::InvalidConfig(format!(
            "{} layer transitions but {} activations",
            layer_sizes.len() - 1,
            activations.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(activations.len());
    for (idx, &activation) in activations.iter().enumerate() {
        let fan_in = layer_sizes[idx];
        let fan_out = layer_sizes[idx + 1];
        let bound = glorot_bound(fan_in, fan_out);
        let data: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        layers.push(Layer {
            weights: DenseMatrix::from_vec(fan_out, fan_in, data)?,
            biases: vec![0.0; fan_out],
            activation,
        });
    }
    Ok(MlpModel { layers, seed })
}

/// Runs the network on a batch, recording every intermediate.
pub fn forward(model: &MlpModel, input: &DenseMatrix) -> Result<(DenseMatrix, ForwardTrace)> {
    if input.cols() != model.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} columns but the first layer expects {}",
            input.cols(),
            model.input_dim()
        )));
    }
    let n = input.rows();
    let mut pre_activations = Vec::with_capacity(model.depth());
    let mut post_activations = Vec::with_capacity(model.depth());
    let mut current = input.clone();
    for layer in &model.layers {
        // z = x W^T + b
        let mut z = current.matmul_bt(&layer.weights)?;
        for r in 0..n {
            for (v, b) in z.row_mut(r).iter_mut().zip(&layer.biases) {
                *v += b;
            }
        }
        let mut a = z.clone();
        for v in a.as_mut_slice() {
            *v = layer.activation.apply(*v);
        }
        pre_activations.push(z);
        post_activations.push(a.clone());
        current = a;
    }
    let trace = ForwardTrace {
        input: input.clone(),
        pre_activations,
        post_activations,
    };
    Ok((current, trace))
}

/// Value of the full training objective for one batch.
pub fn total_loss(
    model: &MlpModel,
    input: &DenseMatrix,
    labels: &[u8],
    spec: &LossSpec,
) -> Result<f64> {
    let (yhat, trace) = forward(model, input)?;
    let task = loss_bce(&yhat, labels)?.value;
    let aux = auxiliary_value(model, &trace, labels, spec)?;
    Ok(task + spec.weight * aux)
}

/// Value of the auxiliary component alone (unweighted).
pub fn auxiliary_value(
    model: &MlpModel,
    trace: &ForwardTrace,
    labels: &[u8],
    spec: &LossSpec,
) -> Result<f64> {
    if spec.kind == LossKind::None || spec.weight == 0.0 {
        return Ok(0.0);
    }
    let target = check_target_layer(model, spec)?;
    let h = &trace.post_activations[target];
    // Batch-statistics penalties are zero on singleton batches: one sample
    // has no covariance.
    let singleton = h.rows() < 2;
    Ok(match spec.kind {
        LossKind::None => 0.0,
        LossKind::Single => loss_single(&model.layers[target].weights, spec.margin)?.value,
        LossKind::Multi => loss_multi(h, labels, spec.margin)?.value,
        LossKind::Multi2 => loss_multi_unlabeled(h, spec.margin)?.value,
        LossKind::Decov if singleton => 0.0,
        LossKind::Decov => loss_decov(h)?.value,
        LossKind::Xcov if singleton => 0.0,
        LossKind::Xcov => loss_xcov(h, trace.output())?.value,
    })
}

fn check_target_layer(model: &MlpModel, spec: &LossSpec) -> Result<usize> {
    if spec.target_layer >= model.depth() {
        return Err(Error::InvalidConfig(format!(
            "target layer {} out of range for a {}-layer model",
            spec.target_layer,
            model.depth()
        )));
    }
    Ok(spec.target_layer)
}

/// Backpropagates `BCE + weight * auxiliary` through the model.
///
/// The trace must come from [`forward`] on this model and batch. For
/// `single` the auxiliary gradient lands only on the target layer's weight
/// matrix; every other parameter's gradient is bitwise identical to a plain
/// task-loss run. For the activation-based kinds it enters at the target
/// layer's post-activation and flows backward from there.
pub fn backward(
    model: &MlpModel,
    trace: &ForwardTrace,
    labels: &[u8],
    spec: &LossSpec,
) -> Result<Gradients> {
    let depth = model.depth();
    let n = trace.input.rows();
    if trace.pre_activations.len() != depth || trace.post_activations.len() != depth {
        return Err(Error::InvalidInput(
            "trace does not match the model depth".into(),
        ));
    }
    for (layer, post) in model.layers.iter().zip(&trace.post_activations) {
        if post.rows() != n || post.cols() != layer.output_dim() {
            return Err(Error::InvalidInput(
                "trace shapes do not chain with the model".into(),
            ));
        }
    }

    let yhat = trace.output();
    let task = loss_bce(yhat, labels)?;

    let inject_aux = spec.kind != LossKind::None && spec.weight != 0.0;
    let target = if inject_aux {
        Some(check_target_layer(model, spec)?)
    } else {
        None
    };

    // Gradient of the objective w.r.t. the final post-activation.
    let mut d_post = task.grad;
    let mut aux_activation_grad: Option<DenseMatrix> = None;
    if let Some(t) = target {
        let h = &trace.post_activations[t];
        let singleton = h.rows() < 2;
        match spec.kind {
            LossKind::Multi => {
                aux_activation_grad = Some(loss_multi(h, labels, spec.margin)?.grad);
            }
            LossKind::Multi2 => {
                aux_activation_grad = Some(loss_multi_unlabeled(h, spec.margin)?.grad);
            }
            LossKind::Decov if singleton => {}
            LossKind::Decov => {
                aux_activation_grad = Some(loss_decov(h)?.grad);
            }
            LossKind::Xcov if singleton => {}
            LossKind::Xcov => {
                let out = loss_xcov(h, yhat)?;
                aux_activation_grad = Some(out.grad_activations);
                d_post.add_scaled(&out.grad_predictions, spec.weight)?;
            }
            LossKind::Single | LossKind::None => {}
        }
        if t == depth - 1 {
            if let Some(g) = aux_activation_grad.take() {
                d_post.add_scaled(&g, spec.weight)?;
            }
        }
    }

    let mut grads = Gradients::zeros_like(model);
    for l in (0..depth).rev() {
        let layer = &model.layers[l];
        let z = &trace.pre_activations[l];
        let a = &trace.post_activations[l];

        // dZ = dA .* act'(Z)
        let mut d_pre = d_post;
        for i in 0..n {
            let zr = z.row(i);
            let ar = a.row(i);
            for ((g, &zv), &av) in d_pre.row_mut(i).iter_mut().zip(zr).zip(ar) {
                *g *= layer.activation.derivative(zv, av);
            }
        }

        let below = if l == 0 {
            &trace.input
        } else {
            &trace.post_activations[l - 1]
        };
        grads.weights[l] = d_pre.matmul_at(below)?;
        for i in 0..n {
            for (b, &g) in grads.biases[l].iter_mut().zip(d_pre.row(i)) {
                *b += g;
            }
        }

        if l == 0 {
            break;
        }
        d_post = d_pre.matmul(&layer.weights)?;
        if target == Some(l - 1) {
            if let Some(g) = aux_activation_grad.take() {
                d_post.add_scaled(&g, spec.weight)?;
            }
        }
    }

    if let (Some(t), LossKind::Single) = (target, spec.kind) {
        let aux = loss_single(&model.layers[t].weights, spec.margin)?;
        grads.weights[t].add_scaled(&aux.grad, spec.weight)?;
    }
    Ok(grads)
}

/// Post-activation of layer `layer_index` for every sample.
pub fn embed(model: &MlpModel, input: &DenseMatrix, layer_index: usize) -> Result<DenseMatrix> {
    if layer_index >= model.depth() {
        return Err(Error::InvalidInput(format!(
            "layer index {layer_index} out of range for a {}-layer model",
            model.depth()
        )));
    }
    let (_, trace) = forward(model, input)?;
    Ok(trace.post_activations[layer_index].clone())
}

pub use persist::{load_model, save_model};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_diff, max_rel_err};
    use rand::Rng;

    fn small_model(seed: u64) -> MlpModel {
        init_model(
            &[6, 8, 5, 1],
            &[Activation::Relu, Activation::Tanh, Activation::Sigmoid],
            seed,
        )
        .unwrap()
    }

    fn random_batch(seed: u64, n: usize, d: usize) -> (DenseMatrix, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        (DenseMatrix::from_vec(n, d, data).unwrap(), labels)
    }

    #[test]
    fn init_is_deterministic() {
        let a = small_model(99);
        let b = small_model(99);
        assert_eq!(a, b);
        let c = small_model(100);
        assert_ne!(a, c);
    }

    #[test]
    fn init_shapes_chain() {
        let m = init_model(&[4, 3, 1], &[Activation::Relu, Activation::Sigmoid], 0).unwrap();
        assert_eq!(m.layers[0].weights.rows(), 3);
        assert_eq!(m.layers[0].weights.cols(), 4);
        assert_eq!(m.layers[1].weights.rows(), 1);
        assert_eq!(m.layers[1].weights.cols(), 3);
        assert_eq!(m.layer_sizes(), vec![4, 3, 1]);
    }

    #[test]
    fn glorot_bound_direct_value() {
        assert_eq!(glorot_bound(3, 3), 1.0);
    }

    #[test]
    fn init_rejects_bad_configs() {
        assert!(init_model(&[4], &[], 0).is_err());
        assert!(init_model(&[4, 0], &[Activation::Relu], 0).is_err());
        assert!(init_model(&[4, 3], &[], 0).is_err());
    }

    #[test]
    fn forward_zero_weights_sigmoid_gives_half() {
        let mut m = init_model(&[3, 1], &[Activation::Sigmoid], 0).unwrap();
        for v in m.layers[0].weights.as_mut_slice() {
            *v = 0.0;
        }
        let (x, _) = random_batch(1, 4, 3);
        let (yhat, _) = forward(&m, &x).unwrap();
        for &v in yhat.as_slice() {
            assert_eq!(v, 0.5);
        }
    }

    #[test]
    fn forward_identity_layer_passes_input_through() {
        let mut m = init_model(&[3, 3], &[Activation::Identity], 0).unwrap();
        for v in m.layers[0].weights.as_mut_slice() {
            *v = 0.0;
        }
        for i in 0..3 {
            m.layers[0].weights.set(i, i, 1.0);
        }
        let (x, _) = random_batch(2, 5, 3);
        let (yhat, _) = forward(&m, &x).unwrap();
        assert_eq!(yhat, x);
    }

    #[test]
    fn trace_last_post_activation_is_output() {
        let m = small_model(7);
        let (x, _) = random_batch(3, 10, 6);
        let (yhat, trace) = forward(&m, &x).unwrap();
        assert_eq!(&yhat, trace.output());
    }

    #[test]
    fn forward_rejects_bad_input_width() {
        let m = small_model(7);
        let (x, _) = random_batch(3, 10, 5);
        assert!(matches!(
            forward(&m, &x),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn backward_zero_weight_equals_plain_bce() {
        let m = small_model(11);
        let (x, labels) = random_batch(4, 12, 6);
        let (_, trace) = forward(&m, &x).unwrap();
        let plain = backward(&m, &trace, &labels, &LossSpec::none()).unwrap();
        let zero_weight = backward(
            &m,
            &trace,
            &labels,
            &LossSpec {
                kind: LossKind::Multi,
                margin: 0.5,
                weight: 0.0,
                target_layer: 1,
                alpha: 0.0,
            },
        )
        .unwrap();
        assert_eq!(plain, zero_weight);
    }

    #[test]
    fn single_touches_only_the_target_weights() {
        let m = small_model(13);
        let (x, labels) = random_batch(5, 12, 6);
        let (_, trace) = forward(&m, &x).unwrap();
        let plain = backward(&m, &trace, &labels, &LossSpec::none()).unwrap();
        let with_single = backward(
            &m,
            &trace,
            &labels,
            &LossSpec::new(LossKind::Single, 5.0, 1.0, 1),
        )
        .unwrap();
        for l in 0..3 {
            assert_eq!(plain.biases[l], with_single.biases[l]);
            if l != 1 {
                assert_eq!(plain.weights[l], with_single.weights[l]);
            }
        }
        assert_ne!(plain.weights[1], with_single.weights[1]);
    }

    #[test]
    fn backward_rejects_stale_trace() {
        let m = small_model(17);
        let other = init_model(
            &[6, 4, 1],
            &[Activation::Relu, Activation::Sigmoid],
            17,
        )
        .unwrap();
        let (x, labels) = random_batch(3, 8, 6);
        let (_, trace) = forward(&other, &x).unwrap();
        assert!(backward(&m, &trace, &labels, &LossSpec::none()).is_err());
    }

    /// Flattens all parameters, runs central differences on the total
    /// objective, and compares with the analytic gradients.
    fn gradient_check(spec: &LossSpec, seed: u64) {
        let model = small_model(seed);
        let (x, labels) = random_batch(seed + 1, 20, 6);

        let mut flat = Vec::new();
        for layer in &model.layers {
            flat.extend_from_slice(layer.weights.as_slice());
            flat.extend_from_slice(&layer.biases);
        }
        let rebuild = |params: &[f64]| {
            let mut m = model.clone();
            let mut offset = 0;
            for layer in &mut m.layers {
                let w_len = layer.weights.as_slice().len();
                layer
                    .weights
                    .as_mut_slice()
                    .copy_from_slice(&params[offset..offset + w_len]);
                offset += w_len;
                let b_len = layer.biases.len();
                layer.biases.copy_from_slice(&params[offset..offset + b_len]);
                offset += b_len;
            }
            m
        };

        let numeric = central_diff(
            |params| total_loss(&rebuild(params), &x, &labels, spec).unwrap(),
            &flat,
            1e-6,
        );

        let (_, trace) = forward(&model, &x).unwrap();
        let grads = backward(&model, &trace, &labels, spec).unwrap();
        let mut analytic = Vec::new();
        for l in 0..model.depth() {
            analytic.extend_from_slice(grads.weights[l].as_slice());
            analytic.extend_from_slice(&grads.biases[l]);
        }

        let err = max_rel_err(&analytic, &numeric, 1e-3);
        assert!(
            err <= 1e-4,
            "kind {:?}: max rel err {err}",
            spec.kind
        );
    }

    #[test]
    fn end_to_end_gradients_match_finite_differences() {
        gradient_check(&LossSpec::none(), 211);
        gradient_check(&LossSpec::new(LossKind::Single, 5.0, 1.0, 1), 223);
        gradient_check(&LossSpec::new(LossKind::Multi, 0.5, 1.0, 1), 227);
        gradient_check(&LossSpec::new(LossKind::Multi2, 0.5, 1.0, 1), 229);
        gradient_check(&LossSpec::new(LossKind::Decov, 0.0, 1.0, 1), 233);
        gradient_check(&LossSpec::new(LossKind::Xcov, 0.0, 1.0, 1), 239);
    }

    #[test]
    fn embed_returns_requested_layer() {
        let m = init_model(
            &[6, 10, 1],
            &[Activation::Relu, Activation::Sigmoid],
            3,
        )
        .unwrap();
        let (x, _) = random_batch(5, 7, 6);
        let (yhat, _) = forward(&m, &x).unwrap();
        let last = embed(&m, &x, 1).unwrap();
        assert_eq!(last, yhat);
        let penultimate = embed(&m, &x, 0).unwrap();
        assert_eq!((penultimate.rows(), penultimate.cols()), (7, 10));
        assert!(embed(&m, &x, 2).is_err());
    }

    #[test]
    fn embed_identical_inputs_give_identical_rows() {
        let m = small_model(5);
        let row = vec![0.5, -0.25, 1.0, 0.0, 2.0, -1.0];
        let x = DenseMatrix::from_rows(&vec![row; 3]).unwrap();
        let e = embed(&m, &x, 1).unwrap();
        assert_eq!(e.row(0), e.row(1));
        assert_eq!(e.row(1), e.row(2));
    }
}
