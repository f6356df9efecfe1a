//! Clustering-quality metrics: contingency tables, entropy, mutual
//! information, the exact expected mutual information under the
//! hypergeometric permutation model, and the AMI / NMI scores built from
//! them. Also the argmax-activation histogram used to inspect learned
//! representations.
//!
//! All logs are natural. AMI is normalized by `max(H(u), H(v))` unless
//! told otherwise; NMI by the geometric mean of the entropies.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Cluster-vs-class co-occurrence counts with cached marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    counts: Vec<u64>,
    rows: usize,
    cols: usize,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// True when every row and every column holds exactly one nonzero
    /// block, i.e. the two labelings are the same partition up to
    /// renaming.
    pub fn is_identical_partition(&self) -> bool {
        for i in 0..self.rows {
            let nonzero = (0..self.cols).filter(|&j| self.count(i, j) > 0).count();
            if nonzero != 1 {
                return false;
            }
        }
        for j in 0..self.cols {
            let nonzero = (0..self.rows).filter(|&i| self.count(i, j) > 0).count();
            if nonzero != 1 {
                return false;
            }
        }
        true
    }
}

/// Builds the contingency table of two labelings. Distinct label values
/// are indexed in order of first appearance.
pub fn contingency(u: &[usize], v: &[usize]) -> Result<ContingencyTable> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!(
            "labelings have lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    if u.is_empty() {
        return Err(Error::InvalidInput("labelings must be non-empty".into()));
    }
    let mut u_index: Vec<usize> = Vec::new();
    let mut v_index: Vec<usize> = Vec::new();
    let mut u_ids = Vec::with_capacity(u.len());
    let mut v_ids = Vec::with_capacity(v.len());
    for &label in u {
        let id = match u_index.iter().position(|&x| x == label) {
            Some(id) => id,
            None => {
                u_index.push(label);
                u_index.len() - 1
            }
        };
        u_ids.push(id);
    }
    for &label in v {
        let id = match v_index.iter().position(|&x| x == label) {
            Some(id) => id,
            None => {
                v_index.push(label);
                v_index.len() - 1
            }
        };
        v_ids.push(id);
    }
    let rows = u_index.len();
    let cols = v_index.len();
    let mut counts = vec![0u64; rows * cols];
    for (&i, &j) in u_ids.iter().zip(&v_ids) {
        counts[i * cols + j] += 1;
    }
    let row_sums: Vec<u64> = (0..rows)
        .map(|i| counts[i * cols..(i + 1) * cols].iter().sum())
        .collect();
    let col_sums: Vec<u64> = (0..cols)
        .map(|j| (0..rows).map(|i| counts[i * cols + j]).sum())
        .collect();
    Ok(ContingencyTable {
        counts,
        rows,
        cols,
        row_sums,
        col_sums,
        total: u.len() as u64,
    })
}

/// Shannon entropy of marginal counts, in nats.
pub fn entropy(counts: &[u64], total: u64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidInput(
            "entropy of an empty distribution is undefined".into(),
        ));
    }
    let n = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    Ok(h)
}

/// Mutual information of the table, in nats.
pub fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total() as f64;
    let mut mi = 0.0;
    for i in 0..table.rows() {
        let a = table.row_sums()[i] as f64;
        for j in 0..table.cols() {
            let nij = table.count(i, j);
            if nij == 0 {
                continue;
            }
            let b = table.col_sums()[j] as f64;
            let nij = nij as f64;
            mi += (nij / n) * ((n * nij) / (a * b)).ln();
        }
    }
    mi.max(0.0)
}

/// Exact expected mutual information of random labelings with the given
/// marginals, under the hypergeometric permutation model. Computed in
/// log-gamma space; stable for totals up to at least 1e6.
pub fn expected_mi(row_sums: &[u64], col_sums: &[u64], total: u64) -> f64 {
    if row_sums.len() <= 1 || col_sums.len() <= 1 {
        // A single cluster on either side has MI identically zero under
        // every permutation.
        return 0.0;
    }
    let n = total as f64;
    let ln_fact = |x: u64| ln_gamma(x as f64 + 1.0);
    let ln_n_fact = ln_fact(total);
    let mut emi = 0.0;
    for &a in row_sums {
        for &b in col_sums {
            let lower = 1.max((a + b).saturating_sub(total));
            let upper = a.min(b);
            let mut nij = lower;
            while nij <= upper {
                let info = ((n * nij as f64) / (a as f64 * b as f64)).ln();
                let ln_prob = ln_fact(a) + ln_fact(b) + ln_fact(total - a) + ln_fact(total - b)
                    - ln_n_fact
                    - ln_fact(nij)
                    - ln_fact(a - nij)
                    - ln_fact(b - nij)
                    - ln_fact(total + nij - a - b);
                emi += (nij as f64 / n) * info * ln_prob.exp();
                nij += 1;
            }
        }
    }
    emi
}

/// How AMI is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmiNormalization {
    /// `(MI - EMI) / (max(H_u, H_v) - EMI)`.
    Max,
    /// `(MI - EMI) / ((H_u + H_v)/2 - EMI)`.
    Arithmetic,
}

impl AmiNormalization {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "arithmetic" => Ok(Self::Arithmetic),
            other => Err(Error::InvalidConfig(format!(
                "unknown AMI normalization '{other}' (expected max|arithmetic)"
            ))),
        }
    }
}

/// How NMI is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmiNormalization {
    /// `MI / sqrt(H_u * H_v)`.
    Geometric,
    /// `MI / ((H_u + H_v)/2)`.
    Arithmetic,
    /// `MI / max(H_u, H_v)`.
    Max,
}

impl NmiNormalization {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Self::Geometric),
            "arithmetic" => Ok(Self::Arithmetic),
            "max" => Ok(Self::Max),
            other => Err(Error::InvalidConfig(format!(
                "unknown NMI normalization '{other}' (expected geometric|arithmetic|max)"
            ))),
        }
    }
}

/// Adjusted mutual information of two labelings.
///
/// Degenerate cases follow a documented convention: when the normalizing
/// denominator vanishes (both labelings single-cluster, or both
/// all-singletons), the score is 1 for identical partitions and 0
/// otherwise.
pub fn ami(u: &[usize], v: &[usize], normalization: AmiNormalization) -> Result<f64> {
    let table = contingency(u, v)?;
    let h_u = entropy(table.row_sums(), table.total())?;
    let h_v = entropy(table.col_sums(), table.total())?;
    let mi = mutual_information(&table);
    let emi = expected_mi(table.row_sums(), table.col_sums(), table.total());
    let norm = match normalization {
        AmiNormalization::Max => h_u.max(h_v),
        AmiNormalization::Arithmetic => 0.5 * (h_u + h_v),
    };
    let denom = norm - emi;
    if denom.abs() < 1e-12 {
        return Ok(if table.is_identical_partition() { 1.0 } else { 0.0 });
    }
    // MI <= max(H) mathematically; the cap only absorbs float rounding.
    Ok(((mi - emi) / denom).min(1.0))
}

/// Normalized mutual information of two labelings.
///
/// Zero entropy on either side yields 1 for identical single-cluster
/// labelings and 0 otherwise.
pub fn nmi(u: &[usize], v: &[usize], normalization: NmiNormalization) -> Result<f64> {
    let table = contingency(u, v)?;
    let h_u = entropy(table.row_sums(), table.total())?;
    let h_v = entropy(table.col_sums(), table.total())?;
    if h_u == 0.0 || h_v == 0.0 {
        return Ok(if table.is_identical_partition() { 1.0 } else { 0.0 });
    }
    let mi = mutual_information(&table);
    let norm = match normalization {
        NmiNormalization::Geometric => (h_u * h_v).sqrt(),
        NmiNormalization::Arithmetic => 0.5 * (h_u + h_v),
        NmiNormalization::Max => h_u.max(h_v),
    };
    Ok((mi / norm).clamp(0.0, 1.0))
}

/// Counts, per fine class, which neuron carries the largest activation.
///
/// Entry `(c, t)` is the number of samples of class `c` whose argmax
/// activation is neuron `t`; argmax ties go to the lowest neuron index.
/// The output has `max(fine_labels) + 1` rows.
pub fn activation_histogram(
    activations: &DenseMatrix,
    fine_labels: &[usize],
) -> Result<Vec<Vec<u64>>> {
    let n = activations.rows();
    if fine_labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} activation rows but {} labels",
            n,
            fine_labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty activation batch".into()));
    }
    let classes = fine_labels.iter().max().unwrap() + 1;
    let d = activations.cols();
    let mut hist = vec![vec![0u64; d]; classes];
    for (i, &class) in fine_labels.iter().enumerate() {
        let row = activations.row(i);
        let mut best = 0;
        for (t, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = t;
            }
        }
        hist[class][best] += 1;
    }
    Ok(hist)
}

/// Number of neurons that are the argmax for at least `fraction` of the
/// samples in the histogram.
pub fn active_neuron_count(histogram: &[Vec<u64>], fraction: f64) -> usize {
    if histogram.is_empty() {
        return 0;
    }
    let d = histogram[0].len();
    let total: u64 = histogram.iter().flatten().sum();
    let threshold = fraction * total as f64;
    (0..d)
        .filter(|&t| {
            let count: u64 = histogram.iter().map(|row| row[t]).sum();
            count as f64 >= threshold
        })
        .count()
}
