//! Auxiliary and task loss components, each returning both the value and
//! exact analytic gradients.
//!
//! The pairwise losses ([`loss_single`], [`loss_multi`],
//! [`loss_multi_unlabeled`]) are computed in vectorized form: the softmax
//! rows and their logs are materialized once and every pairwise divergence
//! comes out of one cross matrix, instead of re-deriving each pair inside a
//! double loop. The naive double-loop path lives in [`reference`] and the
//! two are held together by tests.
//!
//! Gradient identities used throughout, for `p = softmax(w)`,
//! `q = softmax(v)`:
//!
//! ```text
//! d KL(p||q) / dw_s = p_s (ln(p_s/q_s) - KL(p||q))
//! d KL(p||q) / dv_s = q_s - p_s
//! ```
//!
//! A hinge `max(0, m - KL)` is active (gradient flows) only while
//! `KL < m`; at the boundary `KL = m` it is treated as inactive.

pub mod reference;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{softmax_rows, DenseMatrix, PROB_FLOOR};

pub use reference::{reference_pairwise, PairwiseKind};

/// Which auxiliary loss a training run mixes into the task objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Task loss only.
    None,
    /// Pairwise hinged KL over the target layer's weight rows.
    Single,
    /// Pairwise hinged KL over same-label activations in the batch.
    Multi,
    /// Label-free variant of `Multi` over all pairs.
    Multi2,
    /// Off-diagonal activation covariance penalty.
    Decov,
    /// Prediction-activation cross-covariance penalty.
    Xcov,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::None => "none",
            LossKind::Single => "single",
            LossKind::Multi => "multi",
            LossKind::Multi2 => "multi2",
            LossKind::Decov => "decov",
            LossKind::Xcov => "xcov",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" | "baseline" => Ok(LossKind::None),
            "single" => Ok(LossKind::Single),
            "multi" => Ok(LossKind::Multi),
            "multi2" => Ok(LossKind::Multi2),
            "decov" => Ok(LossKind::Decov),
            "xcov" => Ok(LossKind::Xcov),
            other => Err(Error::InvalidConfig(format!(
                "unknown loss kind '{other}' (expected none|single|multi|multi2|decov|xcov)"
            ))),
        }
    }
}

/// Auxiliary loss configuration: which component, its margin, its mixing
/// weight against the task loss, the layer it attaches to, and the
/// reconstruction/auxiliary balance for autoencoder objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub margin: f64,
    pub weight: f64,
    pub target_layer: usize,
    pub alpha: f64,
}

impl LossSpec {
    pub fn none() -> Self {
        Self {
            kind: LossKind::None,
            margin: 0.0,
            weight: 0.0,
            target_layer: 0,
            alpha: 0.0,
        }
    }

    pub fn new(kind: LossKind, margin: f64, weight: f64, target_layer: usize) -> Self {
        Self {
            kind,
            margin,
            weight,
            target_layer,
            alpha: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "loss margin must be finite and >= 0, got {}",
                self.margin
            )));
        }
        if !(self.weight >= 0.0) || !self.weight.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "loss weight must be finite and >= 0, got {}",
                self.weight
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A loss value together with the gradient w.r.t. its primary input.
#[derive(Debug, Clone)]
pub struct LossValueAndGrad {
    pub value: f64,
    pub grad: DenseMatrix,
}

/// Cross-covariance loss output: gradients flow into both the activations
/// and the predictions.
#[derive(Debug, Clone)]
pub struct XcovValueAndGrads {
    pub value: f64,
    pub grad_activations: DenseMatrix,
    pub grad_predictions: DenseMatrix,
}

/// Autoencoder objective output: gradients w.r.t. the reconstruction and
/// the regularized activations.
#[derive(Debug, Clone)]
pub struct AutoencoderValueAndGrads {
    pub value: f64,
    pub grad_reconstruction: DenseMatrix,
    pub grad_activations: DenseMatrix,
}

/// Softmax rows, their logs, and the full pairwise KL matrix
/// `kl[i][j] = KL(p_i || p_j)`, shared by all pairwise losses.
struct PairwiseParts {
    probs: DenseMatrix,
    log_probs: DenseMatrix,
    kl: DenseMatrix,
}

fn pairwise_parts(logits: &DenseMatrix) -> Result<PairwiseParts> {
    let probs = softmax_rows(logits)?;
    let mut log_probs = probs.clone();
    for v in log_probs.as_mut_slice() {
        *v = v.ln();
    }
    // cross[i][j] = sum_t p_it ln p_jt; the diagonal is the negative
    // entropy, so KL(p_i || p_j) = cross[i][i] - cross[i][j].
    let cross = probs.matmul_bt(&log_probs)?;
    let n = logits.rows();
    let mut kl = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let negent = cross.get(i, i);
        for j in 0..n {
            kl.set(i, j, (negent - cross.get(i, j)).max(0.0));
        }
    }
    Ok(PairwiseParts {
        probs,
        log_probs,
        kl,
    })
}

/// Sums `max(0, margin - KL_ij)` over the masked ordered pairs and
/// accumulates the exact gradient w.r.t. the logits, scaled by `scale`.
///
/// `mask(i, j)` selects the ordered pairs entering the sum. Diagonal pairs
/// are fine: their KL is exactly zero, so they add the constant `margin`
/// and a zero gradient.
fn hinged_pairwise_sum(
    parts: &PairwiseParts,
    mask: impl Fn(usize, usize) -> bool,
    margin: f64,
    scale: f64,
) -> (f64, DenseMatrix) {
    let n = parts.probs.rows();
    let d = parts.probs.cols();

    let mut value = 0.0;
    let mut active = DenseMatrix::zeros(n, n);
    let mut active_row = vec![0.0; n];
    let mut active_col = vec![0.0; n];
    let mut kl_row = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if !mask(i, j) {
                continue;
            }
            let kl = parts.kl.get(i, j);
            let slack = margin - kl;
            if slack > 0.0 {
                value += slack;
                active.set(i, j, 1.0);
                active_row[i] += 1.0;
                active_col[j] += 1.0;
                kl_row[i] += kl;
            }
        }
    }

    // grad_i = -p_i .* (a_row_i * ln p_i - (A ln P)_i - kl_row_i)
    //          + (A^T P)_i - a_col_i * p_i
    let log_sums = active.matmul(&parts.log_probs).expect("shape by construction");
    let col_sums = active.matmul_at(&parts.probs).expect("shape by construction");
    let mut grad = DenseMatrix::zeros(n, d);
    for i in 0..n {
        let p = parts.probs.row(i);
        let lp = parts.log_probs.row(i);
        let ls = log_sums.row(i);
        let cs = col_sums.row(i);
        let g = grad.row_mut(i);
        for t in 0..d {
            let from_p_side = -p[t] * (active_row[i] * lp[t] - ls[t] - kl_row[i]);
            let from_q_side = cs[t] - active_col[i] * p[t];
            g[t] = scale * (from_p_side + from_q_side);
        }
    }
    (value, grad)
}

/// Pairwise hinged KL divergence between the softmax-normalized rows of a
/// weight matrix, summed over unordered row pairs in both directions.
///
/// Returns the gradient w.r.t. the weight matrix. By construction the loss
/// touches only this matrix; it cannot influence any other parameter.
pub fn loss_single(weights: &DenseMatrix, margin: f64) -> Result<LossValueAndGrad> {
    if weights.rows() < 2 {
        return Err(Error::InvalidInput(format!(
            "pairwise row loss needs at least 2 rows, got {}",
            weights.rows()
        )));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "margin must be >= 0, got {margin}"
        )));
    }
    let parts = pairwise_parts(weights)?;
    let (value, grad) = hinged_pairwise_sum(&parts, |i, j| i != j, margin, 1.0);
    Ok(LossValueAndGrad { value, grad })
}

/// Pairwise hinged KL divergence between softmax-normalized activations of
/// same-label samples, averaged over the ordered same-label pair count.
///
/// Returns the gradient w.r.t. the activation matrix.
pub fn loss_multi(
    activations: &DenseMatrix,
    labels: &[u8],
    margin: f64,
) -> Result<LossValueAndGrad> {
    if activations.rows() == 0 {
        return Err(Error::InvalidInput("empty activation batch".into()));
    }
    if labels.len() != activations.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} activation rows but {} labels",
            activations.rows(),
            labels.len()
        )));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "margin must be >= 0, got {margin}"
        )));
    }
    let n = activations.rows();
    let mut pair_count = 0u64;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                pair_count += 1;
            }
        }
    }
    let parts = pairwise_parts(activations)?;
    let scale = 2.0 / pair_count as f64;
    let (sum, grad) =
        hinged_pairwise_sum(&parts, |i, j| labels[i] == labels[j], margin, scale);
    Ok(LossValueAndGrad {
        value: scale * sum,
        grad,
    })
}

/// Label-free variant of [`loss_multi`]: every ordered pair participates
/// and the normalizer is `n^2`. Identical to `loss_multi` with constant
/// labels.
pub fn loss_multi_unlabeled(activations: &DenseMatrix, margin: f64) -> Result<LossValueAndGrad> {
    let labels = vec![0u8; activations.rows()];
    loss_multi(activations, &labels, margin)
}

/// DeCov penalty: half the squared Frobenius norm of the batch covariance
/// of the activations, diagonal excluded so activation variance itself is
/// not suppressed.
pub fn loss_decov(activations: &DenseMatrix) -> Result<LossValueAndGrad> {
    let n = activations.rows();
    let d = activations.cols();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "covariance penalty needs at least 2 samples, got {n}"
        )));
    }
    let (centered, _) = activations.centered();
    let mut cov = centered.matmul_at(&centered)?;
    let inv_n = 1.0 / n as f64;
    for v in cov.as_mut_slice() {
        *v *= inv_n;
    }

    let mut value = 0.0;
    let mut cov_offdiag = cov.clone();
    for a in 0..d {
        cov_offdiag.set(a, a, 0.0);
    }
    for a in 0..d {
        for b in 0..d {
            if a != b {
                value += cov.get(a, b) * cov.get(a, b);
            }
        }
    }
    value *= 0.5;

    // dL/dH = (2/n) * centered H * C_offdiag  (C symmetric).
    let mut grad = centered.matmul(&cov_offdiag)?;
    let scale = 2.0 * inv_n;
    for v in grad.as_mut_slice() {
        *v *= scale;
    }
    Ok(LossValueAndGrad { value, grad })
}

/// XCov penalty: half the squared Frobenius norm of the cross-covariance
/// between predictions and activations.
pub fn loss_xcov(
    activations: &DenseMatrix,
    predictions: &DenseMatrix,
) -> Result<XcovValueAndGrads> {
    let n = activations.rows();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "cross-covariance penalty needs at least 2 samples, got {n}"
        )));
    }
    if predictions.rows() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} activation rows but {} prediction rows",
            n,
            predictions.rows()
        )));
    }
    let (h_centered, _) = activations.centered();
    let (y_centered, _) = predictions.centered();
    // V = (1/n) Yc^T Hc, shape c x d.
    let mut v = y_centered.matmul_at(&h_centered)?;
    let inv_n = 1.0 / n as f64;
    for entry in v.as_mut_slice() {
        *entry *= inv_n;
    }
    let value = 0.5 * v.frobenius_sq();

    let mut grad_activations = y_centered.matmul(&v)?;
    for entry in grad_activations.as_mut_slice() {
        *entry *= inv_n;
    }
    let mut grad_predictions = h_centered.matmul_bt(&v)?;
    for entry in grad_predictions.as_mut_slice() {
        *entry *= inv_n;
    }
    Ok(XcovValueAndGrads {
        value,
        grad_activations,
        grad_predictions,
    })
}

/// Mean binary cross-entropy of sigmoid outputs against 0/1 labels.
///
/// Predictions are clamped to `[1e-12, 1 - 1e-12]` before the logs.
pub fn loss_bce(predictions: &DenseMatrix, labels: &[u8]) -> Result<LossValueAndGrad> {
    let n = predictions.rows();
    if predictions.cols() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "binary cross-entropy expects an n x 1 prediction column, got {}x{}",
            n,
            predictions.cols()
        )));
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} predictions but {} labels",
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty prediction batch".into()));
    }
    let inv_n = 1.0 / n as f64;
    let mut value = 0.0;
    let mut grad = DenseMatrix::zeros(n, 1);
    for i in 0..n {
        let y = labels[i] as f64;
        let p = predictions.get(i, 0).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        value -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad.set(i, 0, inv_n * (p - y) / (p * (1.0 - p)));
    }
    Ok(LossValueAndGrad {
        value: value * inv_n,
        grad,
    })
}

/// Autoencoder objective: `(1 - alpha)` times the mean squared
/// reconstruction error plus `alpha` times the unlabeled pairwise loss on
/// the hidden activations.
pub fn loss_autoencoder(
    input: &DenseMatrix,
    reconstruction: &DenseMatrix,
    activations: &DenseMatrix,
    margin: f64,
    alpha: f64,
) -> Result<AutoencoderValueAndGrads> {
    if input.rows() != reconstruction.rows() || input.cols() != reconstruction.cols() {
        return Err(Error::ShapeMismatch(format!(
            "input {}x{} vs reconstruction {}x{}",
            input.rows(),
            input.cols(),
            reconstruction.rows(),
            reconstruction.cols()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let n = input.rows();
    if n == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let inv_n = 1.0 / n as f64;

    let mut recon_value = 0.0;
    let mut grad_reconstruction = DenseMatrix::zeros(n, input.cols());
    for i in 0..n {
        let xi = input.row(i);
        let ri = reconstruction.row(i);
        let gi = grad_reconstruction.row_mut(i);
        for ((g, &x), &r) in gi.iter_mut().zip(xi).zip(ri) {
            let diff = r - x;
            recon_value += diff * diff;
            *g = (1.0 - alpha) * 2.0 * inv_n * diff;
        }
    }
    recon_value *= inv_n;

    let aux = loss_multi_unlabeled(activations, margin)?;
    let mut grad_activations = aux.grad;
    for v in grad_activations.as_mut_slice() {
        *v *= alpha;
    }
    Ok(AutoencoderValueAndGrads {
        value: (1.0 - alpha) * recon_value + alpha * aux.value,
        grad_reconstruction,
        grad_activations,
    })
}
