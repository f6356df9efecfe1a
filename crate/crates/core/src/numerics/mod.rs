//! Dense linear algebra and probability-vector primitives.
//!
//! The three kernels here — [`softmax`], [`kl_divergence`] and
//! [`hinged_kl`] — are the building blocks every pairwise loss is assembled
//! from. All logarithms are natural logs.

mod matrix;
mod pca;

pub use matrix::DenseMatrix;
pub use pca::pca_project;

use crate::error::{Error, Result};

/// Probabilities are floored at this value so that no downstream logarithm
/// can produce `-inf`. This is the only deviation from the exact formulas.
pub const PROB_FLOOR: f64 = 1e-12;

/// A probability distribution: strictly positive entries summing to one
/// (within 1e-9; the floor applied by [`softmax`] can leave the sum a hair
/// above one for saturated inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    p: Vec<f64>,
}

impl ProbVector {
    /// Validates and wraps a probability vector.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput(
                "probability vector must be non-empty".into(),
            ));
        }
        if p.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(
                "probability entries must be strictly positive and finite".into(),
            ));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "probabilities must sum to 1 within 1e-9, got {sum}"
            )));
        }
        Ok(Self { p })
    }

    /// Wraps without validation. The caller guarantees the invariants; used
    /// by hot paths and by tests that need to probe error handling.
    pub fn new_unchecked(p: Vec<f64>) -> Self {
        Self { p }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// Writes the softmax of `src` into `dst`: `exp(v_t - max v) / sum`.
///
/// The max subtraction makes the exponentials overflow-safe for inputs of
/// magnitude up to at least 1e4; outputs are floored at [`PROB_FLOOR`].
pub(crate) fn softmax_into(src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), dst.len());
    let max = src.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (d, &v) in dst.iter_mut().zip(src) {
        let e = (v - max).exp();
        *d = e;
        sum += e;
    }
    for d in dst.iter_mut() {
        *d = (*d / sum).max(PROB_FLOOR);
    }
}

/// Softmax of a real vector.
///
/// Errors on empty or non-finite input.
pub fn softmax(v: &[f64]) -> Result<ProbVector> {
    if v.is_empty() {
        return Err(Error::InvalidInput("softmax input must be non-empty".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(
            "softmax input entries must be finite".into(),
        ));
    }
    let mut p = vec![0.0; v.len()];
    softmax_into(v, &mut p);
    Ok(ProbVector { p })
}

/// Softmax applied to every row of a matrix.
pub fn softmax_rows(m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.cols() == 0 {
        return Err(Error::InvalidInput("softmax input must be non-empty".into()));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput(
            "softmax input entries must be finite".into(),
        ));
    }
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        // Same kernel as the vector path, so batched and scalar uses agree
        // bit for bit.
        let src: Vec<f64> = m.row(r).to_vec();
        softmax_into(&src, out.row_mut(r));
    }
    Ok(out)
}

/// Kullback-Leibler divergence `sum_t p_t ln(p_t / q_t)` in nats.
///
/// The result is clamped at zero; floating-point rounding can otherwise
/// leave a value like `-1e-17` for nearly identical distributions.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "KL divergence needs equal lengths, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut sum = 0.0;
    for (&pi, &qi) in p.as_slice().iter().zip(q.as_slice()) {
        if pi <= 0.0 || qi <= 0.0 {
            return Err(Error::Domain(
                "KL divergence requires strictly positive entries".into(),
            ));
        }
        sum += pi * (pi.ln() - qi.ln());
    }
    Ok(sum.max(0.0))
}

/// Margin-hinged KL divergence `max(0, m - KL(p || q))`.
///
/// Lies in `[0, m]`; pairs whose divergence already exceeds the margin
/// contribute nothing.
pub fn hinged_kl(p: &ProbVector, q: &ProbVector, margin: f64) -> Result<f64> {
    if !(margin >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "margin must be >= 0, got {margin}"
        )));
    }
    let kl = kl_divergence(p, q)?;
    Ok((margin - kl).max(0.0))
}
