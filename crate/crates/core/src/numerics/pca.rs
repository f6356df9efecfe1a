//! Principal component extraction via power iteration with deflation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DenseMatrix;
use crate::error::{Error, Result};

const MAX_POWER_ITERS: usize = 1000;
const POWER_TOL: f64 = 1e-13;

/// Projects `x` (n x d) onto its top-`k` principal components.
///
/// Returns `(components, projected)` where `components` is k x d with
/// orthonormal rows (the top-k eigenvectors of the sample covariance of
/// mean-centered `x`) and `projected` is the centered data times the
/// component transpose. Each component is sign-fixed so its
/// largest-magnitude entry is positive.
pub fn pca_project(x: &DenseMatrix, k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, d) = (x.rows(), x.cols());
    if k > d {
        return Err(Error::ShapeMismatch(format!(
            "cannot extract {k} components from {d}-dimensional data"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput(
            "PCA needs at least two samples".into(),
        ));
    }

    let (centered, _) = x.centered();
    // Sample covariance, 1/(n-1) normalizer.
    let mut cov = centered.matmul_at(&centered)?;
    let scale = 1.0 / (n as f64 - 1.0);
    for v in cov.as_mut_slice() {
        *v *= scale;
    }

    let mut components = DenseMatrix::zeros(k, d);
    let mut rng = ChaCha8Rng::seed_from_u64(0x05ee_d9c4);
    for comp in 0..k {
        let found: Vec<&[f64]> = (0..comp).map(|i| components.row(i)).collect();
        let v = dominant_eigenvector(&cov, &found, &mut rng);
        deflate(&mut cov, &v);
        components.row_mut(comp).copy_from_slice(&v);
    }

    let projected = centered.matmul_bt(&components)?;
    Ok((components, projected))
}

/// Power iteration for the dominant eigenvector of symmetric `a`,
/// re-orthogonalized each step against already-found components so the
/// returned basis stays orthonormal even under deflation rounding.
fn dominant_eigenvector(a: &DenseMatrix, found: &[&[f64]], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = a.rows();
    let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    orthogonalize(&mut v, found);
    if normalize(&mut v) < 1e-300 {
        // Degenerate start; fall back to a basis vector orthogonal to the
        // found components.
        v = orthogonal_basis_vector(d, found);
    }

    for _ in 0..MAX_POWER_ITERS {
        let mut next = mat_vec(a, &v);
        orthogonalize(&mut next, found);
        let norm = normalize(&mut next);
        if norm < 1e-300 {
            // Zero (or fully deflated) covariance in the remaining
            // subspace: any orthogonal unit vector is a valid component of
            // eigenvalue ~0.
            return orthogonal_basis_vector(d, found);
        }
        let delta = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        v = next;
        if delta < POWER_TOL {
            break;
        }
    }
    fix_sign(&mut v);
    v
}

fn mat_vec(a: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..a.rows())
        .map(|r| a.row(r).iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn orthogonalize(v: &mut [f64], basis: &[&[f64]]) {
    for b in basis {
        let dot: f64 = v.iter().zip(*b).map(|(x, y)| x * y).sum();
        for (vi, bi) in v.iter_mut().zip(*b) {
            *vi -= dot * bi;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Largest-magnitude entry made positive; ties resolved by the first
/// maximal entry.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn orthogonal_basis_vector(d: usize, found: &[&[f64]]) -> Vec<f64> {
    for axis in 0..d {
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        orthogonalize(&mut v, found);
        if normalize(&mut v) > 1e-6 {
            fix_sign(&mut v);
            return v;
        }
    }
    // found spans the whole space only when k > d, which is rejected
    // upstream.
    unreachable!("no orthogonal direction left");
}

/// `a -= lambda * v v^T` with `lambda = v^T a v`.
fn deflate(a: &mut DenseMatrix, v: &[f64]) {
    let av = mat_vec(a, v);
    let lambda: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
    let d = a.rows();
    for i in 0..d {
        for j in 0..d {
            let val = a.get(i, j) - lambda * v[i] * v[j];
            a.set(i, j, val);
        }
    }
}
