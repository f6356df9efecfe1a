//! Naive double-loop reference evaluation of the pairwise losses.
//!
//! This module is a test oracle: every pair is recomputed from scratch with
//! plain nested loops and no batching tricks, and the vectorized production
//! implementations are required to match it to 1e-12. It deliberately
//! carries its own softmax and KL code so the two paths share nothing but
//! the definitions.

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, PROB_FLOOR};

/// Which pairwise loss the reference evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairwiseKind {
    /// Row-of-weight-matrix pairs, `i < j`, both KL directions.
    Single,
    /// Same-label sample pairs, all ordered pairs, normalized by the
    /// same-label pair count.
    Multi,
    /// All sample pairs regardless of label, normalized by `n^2`.
    Multi2,
}

fn naive_softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| (e / sum).max(PROB_FLOOR)).collect()
}

fn naive_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

fn naive_hinge(p: &[f64], q: &[f64], margin: f64) -> f64 {
    (margin - naive_kl(p, q)).max(0.0)
}

/// Literal nested-loop evaluation of the pairwise loss values.
///
/// `labels` is required for [`PairwiseKind::Multi`] and ignored otherwise.
pub fn reference_pairwise(
    kind: PairwiseKind,
    inputs: &DenseMatrix,
    labels: Option<&[u8]>,
    margin: f64,
) -> Result<f64> {
    if !(margin >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "margin must be >= 0, got {margin}"
        )));
    }
    let n = inputs.rows();
    if n == 0 {
        return Err(Error::InvalidInput("empty input matrix".into()));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|r| naive_softmax(inputs.row(r))).collect();

    match kind {
        PairwiseKind::Single => {
            if n < 2 {
                return Err(Error::InvalidInput(
                    "single-layer loss needs at least two rows".into(),
                ));
            }
            let mut sum = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    sum += naive_hinge(&rows[i], &rows[j], margin)
                        + naive_hinge(&rows[j], &rows[i], margin);
                }
            }
            Ok(sum)
        }
        PairwiseKind::Multi => {
            let y = labels.ok_or_else(|| {
                Error::InvalidInput("multi-sample loss needs labels".into())
            })?;
            if y.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "{n} rows but {} labels",
                    y.len()
                )));
            }
            let mut sum = 0.0;
            let mut pairs = 0u64;
            for i in 0..n {
                for j in 0..n {
                    if y[i] == y[j] {
                        sum += naive_hinge(&rows[i], &rows[j], margin)
                            + naive_hinge(&rows[j], &rows[i], margin);
                        pairs += 1;
                    }
                }
            }
            Ok(sum / pairs as f64)
        }
        PairwiseKind::Multi2 => {
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    sum += naive_hinge(&rows[i], &rows[j], margin)
                        + naive_hinge(&rows[j], &rows[i], margin);
                }
            }
            Ok(sum / (n * n) as f64)
        }
    }
}
