//! KMeans: k-means++ initialization, Lloyd iterations, restarts.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// KMeans hyperparameters. Defaults: 10 restarts, 300 Lloyd iterations,
/// tolerance 1e-6 on centroid movement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansParams {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl KmeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
            seed,
        }
    }
}

/// Outcome of the best restart.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: DenseMatrix,
    pub inertia: f64,
    pub iterations_run: usize,
    pub restart_index: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Nearest-centroid labels; ties go to the lowest centroid index.
pub fn assign(x: &DenseMatrix, centroids: &DenseMatrix) -> Result<Vec<usize>> {
    if x.cols() != centroids.cols() {
        return Err(Error::ShapeMismatch(format!(
            "points have {} dims but centroids have {}",
            x.cols(),
            centroids.cols()
        )));
    }
    if centroids.rows() == 0 {
        return Err(Error::InvalidInput("no centroids".into()));
    }
    let mut labels = vec![0usize; x.rows()];
    for (i, label) in labels.iter_mut().enumerate() {
        let point = x.row(i);
        let mut best = 0usize;
        let mut best_dist = squared_distance(point, centroids.row(0));
        for c in 1..centroids.rows() {
            let dist = squared_distance(point, centroids.row(c));
            if dist < best_dist {
                best_dist = dist;
                best = c;
            }
        }
        *label = best;
    }
    Ok(labels)
}

fn inertia_of(x: &DenseMatrix, centroids: &DenseMatrix, assignments: &[usize]) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(x.row(i), centroids.row(c)))
        .sum()
}

/// k-means++ seeding: first center uniform, later centers sampled with
/// probability proportional to the squared distance to the nearest chosen
/// center.
fn kmeanspp_init(x: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = x.rows();
    let d = x.cols();
    let mut centroids = DenseMatrix::zeros(k, d);
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));

    let mut min_dist: Vec<f64> = (0..n)
        .map(|i| squared_distance(x.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = min_dist.iter().sum();
        let chosen = if total > 0.0 && total.is_finite() {
            WeightedIndex::new(&min_dist)
                .map(|w| w.sample(rng))
                .unwrap_or_else(|_| rng.gen_range(0..n))
        } else {
            // All remaining distances are zero (duplicate points); any
            // point is as good as any other.
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(chosen));
        for (i, md) in min_dist.iter_mut().enumerate() {
            let dist = squared_distance(x.row(i), centroids.row(c));
            if dist < *md {
                *md = dist;
            }
        }
    }
    centroids
}

/// Recomputes centroids as member means and repairs empty clusters by
/// seizing the point farthest from its currently assigned centroid.
fn update_centroids(
    x: &DenseMatrix,
    assignments: &mut [usize],
    k: usize,
) -> DenseMatrix {
    let d = x.cols();
    let mut sums = DenseMatrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        for (s, v) in sums.row_mut(c).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            for s in sums.row_mut(c) {
                *s *= inv;
            }
        }
    }

    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        // Farthest point whose donor cluster keeps at least one member;
        // ties resolved by the lowest point index.
        let mut best_point: Option<usize> = None;
        let mut best_dist = -1.0;
        for i in 0..x.rows() {
            let donor = assignments[i];
            if counts[donor] < 2 {
                continue;
            }
            let dist = squared_distance(x.row(i), sums.row(donor));
            if dist > best_dist {
                best_dist = dist;
                best_point = Some(i);
            }
        }
        let point = best_point.expect("n >= k guarantees a donor cluster with >= 2 members");
        let donor = assignments[point];
        assignments[point] = empty;
        counts[donor] -= 1;
        counts[empty] = 1;
        // Rebuild the donor mean without the seized point.
        let mut donor_sum = vec![0.0; d];
        for (i, &c) in assignments.iter().enumerate() {
            if c == donor {
                for (s, v) in donor_sum.iter_mut().zip(x.row(i)) {
                    *s += v;
                }
            }
        }
        let inv = 1.0 / counts[donor] as f64;
        for (dest, s) in sums.row_mut(donor).iter_mut().zip(&donor_sum) {
            *dest = s * inv;
        }
        sums.row_mut(empty).copy_from_slice(x.row(point));
    }
    sums
}

fn lloyd(
    x: &DenseMatrix,
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, DenseMatrix, f64, usize) {
    let mut centroids = kmeanspp_init(x, k, rng);
    let mut assignments = assign(x, &centroids).expect("shapes agree by construction");
    let mut iterations = 0;
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..max_iter {
        iterations += 1;
        let new_centroids = update_centroids(x, &mut assignments, k);
        let movement = (0..k)
            .map(|c| squared_distance(centroids.row(c), new_centroids.row(c)).sqrt())
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        assignments = assign(x, &centroids).expect("shapes agree by construction");

        let inertia = inertia_of(x, &centroids, &assignments);
        debug_assert!(
            inertia <= prev_inertia + 1e-9 * (1.0 + prev_inertia),
            "Lloyd iteration increased inertia: {prev_inertia} -> {inertia}"
        );
        prev_inertia = inertia;
        if movement < tol {
            break;
        }
    }
    let inertia = inertia_of(x, &centroids, &assignments);
    (assignments, centroids, inertia, iterations)
}

/// Runs `n_init` independent k-means++ restarts and returns the one with
/// the lowest inertia (ties go to the lowest restart index).
///
/// Restart `r` draws from a ChaCha8 generator seeded with `params.seed` on
/// stream `r`, so results do not depend on evaluation order.
pub fn kmeans(x: &DenseMatrix, params: &KmeansParams) -> Result<ClusteringResult> {
    let n = x.rows();
    if params.k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if params.k > n {
        return Err(Error::InvalidInput(format!(
            "k = {} exceeds the number of samples {n}",
            params.k
        )));
    }
    if params.n_init == 0 {
        return Err(Error::InvalidInput("n_init must be at least 1".into()));
    }

    let mut best: Option<ClusteringResult> = None;
    for restart in 0..params.n_init {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(restart as u64);
        let (assignments, centroids, inertia, iterations_run) =
            lloyd(x, params.k, params.max_iter, params.tol, &mut rng);
        let candidate = ClusteringResult {
            assignments,
            centroids,
            inertia,
            iterations_run,
            restart_index: restart,
        };
        let better = match &best {
            None => true,
            Some(b) => candidate.inertia < b.inertia,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("n_init >= 1"))
}
