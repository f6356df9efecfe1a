//! Central-difference gradient checking helpers.
//!
//! Every analytic gradient in this crate is verified against these
//! routines. They live in the library rather than in test code because the
//! acceptance suites of downstream crates use them too.

/// Central finite-difference gradient of `f` at `x` with step `h`:
/// `(f(x + h e_i) - f(x - h e_i)) / 2h` per coordinate.
pub fn central_diff<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let original = probe[i];
        probe[i] = original + h;
        let plus = f(&probe);
        probe[i] = original - h;
        let minus = f(&probe);
        probe[i] = original;
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Largest elementwise relative error between two gradients.
///
/// The denominator is floored to keep the comparison meaningful where the
/// true gradient is near zero: with step 1e-6 in double precision the
/// finite-difference noise is around 1e-9, so a floor of 1e-3 turns the
/// check into an absolute one (|a - b| <= tol * floor) exactly where
/// relative error stops being informative.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
