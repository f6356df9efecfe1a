//! Dataset construction: synthetic grouped-Gaussian blobs, IDX image/label
//! files, fine-to-group label mappings, deterministic splits, and CSV
//! import/export.
//!
//! Fine class labels exist only for evaluation; training consumes a
//! [`TrainingView`](crate::network::TrainingView) that carries the binary
//! group labels alone.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::network::TrainingView;
use crate::numerics::DenseMatrix;

/// Features plus two label arrays: fine class ids (evaluation-only ground
/// truth) and binary group labels (the training target).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DenseMatrix,
    pub fine_labels: Vec<usize>,
    pub group_labels: Vec<u8>,
    pub name: String,
}

impl LabeledDataset {
    pub fn new(
        features: DenseMatrix,
        fine_labels: Vec<usize>,
        group_labels: Vec<u8>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let ds = Self {
            features,
            fine_labels,
            group_labels,
            name: name.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.fine_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine_labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Shared validator: array lengths agree, features finite, group
    /// labels binary.
    pub fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.fine_labels.len() != n || self.group_labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows, {} fine labels, {} group labels",
                n,
                self.fine_labels.len(),
                self.group_labels.len()
            )));
        }
        if !self.features.is_finite() {
            return Err(Error::InvalidInput(
                "dataset features must be finite".into(),
            ));
        }
        if self.group_labels.iter().any(|&g| g > 1) {
            return Err(Error::InvalidInput(
                "group labels must be binary 0/1".into(),
            ));
        }
        Ok(())
    }

    /// The group-only view handed to training.
    pub fn training_view(&self) -> TrainingView<'_> {
        TrainingView {
            features: &self.features,
            group_labels: &self.group_labels,
        }
    }

    /// Rows selected by index, in order.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<LabeledDataset> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut fine = Vec::with_capacity(indices.len());
        let mut group = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidInput(format!(
                    "index {i} out of range for {} samples",
                    self.len()
                )));
            }
            data.extend_from_slice(self.features.row(i));
            fine.push(self.fine_labels[i]);
            group.push(self.group_labels[i]);
        }
        LabeledDataset::new(
            DenseMatrix::from_vec(indices.len(), d, data)?,
            fine,
            group,
            name,
        )
    }
}

/// Fine-class to binary-group assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupMapping {
    /// Classes below the threshold map to group 0, the rest to group 1.
    Threshold(usize),
    /// Explicit per-class table: `table[class]` is the group.
    Table(Vec<u8>),
}

impl GroupMapping {
    pub fn group_of(&self, fine: usize) -> Option<u8> {
        match self {
            GroupMapping::Threshold(t) => Some(u8::from(fine >= *t)),
            GroupMapping::Table(table) => table.get(fine).copied(),
        }
    }
}

/// Rewrites the group labels of a dataset according to `mapping`.
///
/// Errors if a fine label is not covered or if the mapping sends every
/// present class to the same group.
pub fn apply_grouping(ds: &LabeledDataset, mapping: &GroupMapping) -> Result<LabeledDataset> {
    let mut groups = Vec::with_capacity(ds.len());
    for &fine in &ds.fine_labels {
        let group = mapping.group_of(fine).ok_or_else(|| {
            Error::Mapping(format!("fine label {fine} is not covered by the mapping"))
        })?;
        if group > 1 {
            return Err(Error::Mapping(format!(
                "mapping assigns non-binary group {group} to class {fine}"
            )));
        }
        groups.push(group);
    }
    if !groups.is_empty() && (groups.iter().all(|&g| g == 0) || groups.iter().all(|&g| g == 1)) {
        return Err(Error::Mapping(
            "mapping leaves one group empty on this dataset".into(),
        ));
    }
    LabeledDataset::new(
        ds.features.clone(),
        ds.fine_labels.clone(),
        groups,
        ds.name.clone(),
    )
}

fn min_center_separation(centers: &DenseMatrix) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..centers.rows() {
        for j in (i + 1)..centers.rows() {
            let dist: f64 = centers
                .row(i)
                .iter()
                .zip(centers.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            min = min.min(dist);
        }
    }
    min
}

/// Synthetic grouped-Gaussian dataset: `n_classes` centers drawn from a
/// seeded standard normal scaled by `center_scale`, samples perturbed by
/// isotropic noise of scale `noise_sigma`, and classes below
/// `n_classes / 2` assigned to group 0.
///
/// Centers are required to be at least `4 * noise_sigma` apart so the fine
/// classes stay recoverable; a seed whose centers violate that is replaced
/// by the next one, which the dataset name records.
pub fn gen_blobs(
    n_per_class: usize,
    n_classes: usize,
    dim: usize,
    center_scale: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_classes < 2 || !n_classes.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "n_classes must be even and >= 2, got {n_classes}"
        )));
    }
    if n_per_class < 1 {
        return Err(Error::InvalidConfig("n_per_class must be >= 1".into()));
    }
    if dim < 2 {
        return Err(Error::InvalidConfig(format!(
            "dim must be >= 2, got {dim}"
        )));
    }
    if !(center_scale > 0.0) || !(noise_sigma >= 0.0) {
        return Err(Error::InvalidConfig(
            "center_scale must be > 0 and noise_sigma >= 0".into(),
        ));
    }

    // Regenerate with the next seed until the separation guard holds.
    let mut effective_seed = seed;
    let (centers, rng) = loop {
        let mut rng = ChaCha8Rng::seed_from_u64(effective_seed);
        let mut centers = DenseMatrix::zeros(n_classes, dim);
        for v in centers.as_mut_slice() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z * center_scale;
        }
        if min_center_separation(&centers) > 4.0 * noise_sigma {
            break (centers, rng);
        }
        effective_seed += 1;
    };
    let mut rng = rng;

    let n = n_per_class * n_classes;
    let mut data = Vec::with_capacity(n * dim);
    let mut fine = Vec::with_capacity(n);
    let mut group = Vec::with_capacity(n);
    for class in 0..n_classes {
        for _ in 0..n_per_class {
            for &c in centers.row(class) {
                let z: f64 = rng.sample(StandardNormal);
                data.push(c + noise_sigma * z);
            }
            fine.push(class);
            group.push(u8::from(class >= n_classes / 2));
        }
    }
    let name = if effective_seed == seed {
        format!("blobs(seed={seed})")
    } else {
        format!("blobs(seed={effective_seed},requested={seed})")
    };
    LabeledDataset::new(DenseMatrix::from_vec(n, dim, data)?, fine, group, name)
}

fn read_u32_be(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Loads big-endian IDX image and label files.
///
/// Image files carry magic `0x00000803` and dimensions `[n, rows, cols]`;
/// pixels are unsigned bytes, rescaled to `[0, 1]` and flattened row-major.
/// Label files carry magic `0x00000801` and `[n]` unsigned bytes. Group
/// labels are provisionally assigned by thresholding at half the label
/// range; apply the real mapping with [`apply_grouping`].
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let mut images = BufReader::new(File::open(images_path)?);
    let magic = read_u32_be(&mut images)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic 0x{magic:08x} in {} (expected 0x{IDX_IMAGES_MAGIC:08x})",
            images_path.display()
        )));
    }
    let n_images = read_u32_be(&mut images)? as usize;
    let rows = read_u32_be(&mut images)? as usize;
    let cols = read_u32_be(&mut images)? as usize;
    let d = rows * cols;
    let mut pixels = vec![0u8; n_images * d];
    images.read_exact(&mut pixels).map_err(|e| {
        Error::Format(format!(
            "image file {} truncated: {e}",
            images_path.display()
        ))
    })?;

    let mut labels_file = BufReader::new(File::open(labels_path)?);
    let labels_magic = read_u32_be(&mut labels_file)?;
    if labels_magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic 0x{labels_magic:08x} in {} (expected 0x{IDX_LABELS_MAGIC:08x})",
            labels_path.display()
        )));
    }
    let n_labels = read_u32_be(&mut labels_file)? as usize;
    if n_labels != n_images {
        return Err(Error::InvalidInput(format!(
            "{n_images} images but {n_labels} labels"
        )));
    }
    let mut raw_labels = vec![0u8; n_labels];
    labels_file.read_exact(&mut raw_labels).map_err(|e| {
        Error::Format(format!(
            "label file {} truncated: {e}",
            labels_path.display()
        ))
    })?;

    let data: Vec<f64> = pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let fine: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let max_label = fine.iter().copied().max().unwrap_or(0);
    let threshold = max_label / 2 + 1;
    let group: Vec<u8> = fine.iter().map(|&f| u8::from(f >= threshold)).collect();
    LabeledDataset::new(
        DenseMatrix::from_vec(n_images, d, data)?,
        fine,
        group,
        format!("idx({})", images_path.display()),
    )
}

/// Seeded shuffle followed by a contiguous cut into train/validation/test.
///
/// Fractions must be positive and sum to 1 within 1e-9; every part must
/// receive at least one sample.
pub fn split(
    ds: &LabeledDataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let (f_train, f_val, f_test) = fractions;
    if !(f_train > 0.0 && f_val > 0.0 && f_test > 0.0) {
        return Err(Error::InvalidConfig(
            "split fractions must all be positive".into(),
        ));
    }
    if ((f_train + f_val + f_test) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must sum to 1, got {}",
            f_train + f_val + f_test
        )));
    }
    let n = ds.len();
    let cut1 = ((f_train * n as f64).round() as usize).min(n);
    let cut2 = (((f_train + f_val) * n as f64).round() as usize).clamp(cut1, n);
    if cut1 == 0 || cut2 == cut1 || cut2 == n {
        return Err(Error::InvalidConfig(format!(
            "split of {n} samples leaves an empty part (cuts at {cut1}, {cut2})"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);

    let train = ds.subset(&order[..cut1], format!("{}/train", ds.name))?;
    let val = ds.subset(&order[cut1..cut2], format!("{}/validation", ds.name))?;
    let test = ds.subset(&order[cut2..], format!("{}/test", ds.name))?;
    Ok((train, val, test))
}

/// Writes a dataset as CSV with header
/// `feature_0,...,feature_{d-1},fine_label,group_label`. Features are
/// written with enough precision to round-trip exactly.
pub fn save_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..ds.dim()).map(|i| format!("feature_{i}")).collect();
    header.push("fine_label".into());
    header.push("group_label".into());
    writer.write_record(&header)?;
    for i in 0..ds.len() {
        let mut record: Vec<String> = ds.features.row(i).iter().map(|v| format!("{v}")).collect();
        record.push(ds.fine_labels[i].to_string());
        record.push(ds.group_labels[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a dataset written by [`save_csv`].
pub fn load_csv(path: &Path) -> Result<LabeledDataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3 {
        return Err(Error::Format(format!(
            "dataset CSV needs feature columns plus fine_label and group_label, got {} columns",
            headers.len()
        )));
    }
    let d = headers.len() - 2;
    for (i, field) in headers.iter().take(d).enumerate() {
        if field != format!("feature_{i}") {
            return Err(Error::Format(format!(
                "unexpected column '{field}' at position {i} (expected feature_{i})"
            )));
        }
    }
    if &headers[d] != "fine_label" || &headers[d + 1] != "group_label" {
        return Err(Error::Format(
            "dataset CSV must end with fine_label,group_label columns".into(),
        ));
    }

    let mut data = Vec::new();
    let mut fine = Vec::new();
    let mut group = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Format(format!(
                "row {line} has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        for field in record.iter().take(d) {
            let v: f64 = field
                .parse()
                .map_err(|e| Error::Format(format!("row {line}: bad feature '{field}': {e}")))?;
            data.push(v);
        }
        fine.push(record[d].parse().map_err(|e| {
            Error::Format(format!("row {line}: bad fine label '{}': {e}", &record[d]))
        })?);
        group.push(record[d + 1].parse().map_err(|e| {
            Error::Format(format!(
                "row {line}: bad group label '{}': {e}",
                &record[d + 1]
            ))
        })?);
    }
    let n = fine.len();
    LabeledDataset::new(
        DenseMatrix::from_vec(n, d, data)?,
        fine,
        group,
        format!("csv({})", path.display()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn blobs_zero_noise_samples_equal_centers() {
        let ds = gen_blobs(5, 4, 3, 1.0, 0.0, 2).unwrap();
        for class in 0..4 {
            let base = ds.features.row(class * 5).to_vec();
            for s in 0..5 {
                assert_eq!(ds.features.row(class * 5 + s), &base[..]);
            }
        }
    }

    #[test]
    fn blobs_same_seed_identical() {
        let a = gen_blobs(10, 4, 5, 1.0, 0.1, 9).unwrap();
        let b = gen_blobs(10, 4, 5, 1.0, 0.1, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blobs_counts_and_group_balance() {
        let ds = gen_blobs(100, 10, 20, 1.0, 0.1, 7).unwrap();
        assert_eq!(ds.len(), 1000);
        let group1 = ds.group_labels.iter().filter(|&&g| g == 1).count();
        assert_eq!(group1, 500);
        // Group mirrors the fine-class threshold.
        for (fine, group) in ds.fine_labels.iter().zip(&ds.group_labels) {
            assert_eq!(*group, u8::from(*fine >= 5));
        }
    }

    #[test]
    fn blobs_separation_guard_holds() {
        let ds = gen_blobs(2, 10, 20, 1.0, 0.1, 7).unwrap();
        // Recover per-class centers as means and check the 4 sigma guard.
        let mut min = f64::INFINITY;
        for a in 0..10 {
            for b in (a + 1)..10 {
                let ra = ds.features.row(a * 2);
                let rb = ds.features.row(b * 2);
                let dist: f64 = ra
                    .iter()
                    .zip(rb)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                min = min.min(dist);
            }
        }
        assert!(min > 4.0 * 0.1, "min separation {min}");
    }

    #[test]
    fn blobs_rejects_bad_configs() {
        assert!(gen_blobs(5, 3, 4, 1.0, 0.1, 0).is_err());
        assert!(gen_blobs(5, 0, 4, 1.0, 0.1, 0).is_err());
        assert!(gen_blobs(0, 4, 4, 1.0, 0.1, 0).is_err());
        assert!(gen_blobs(5, 4, 1, 1.0, 0.1, 0).is_err());
    }

    fn write_idx_pair(dir: &Path, pixels: &[u8], labels: &[u8], rows: u32, cols: u32) -> (std::path::PathBuf, std::path::PathBuf) {
        let images_path = dir.join("images.idx");
        let labels_path = dir.join("labels.idx");
        let n = labels.len() as u32;
        let mut f = File::create(&images_path).unwrap();
        f.write_all(&0x0000_0803u32.to_be_bytes()).unwrap();
        f.write_all(&n.to_be_bytes()).unwrap();
        f.write_all(&rows.to_be_bytes()).unwrap();
        f.write_all(&cols.to_be_bytes()).unwrap();
        f.write_all(pixels).unwrap();
        let mut f = File::create(&labels_path).unwrap();
        f.write_all(&0x0000_0801u32.to_be_bytes()).unwrap();
        f.write_all(&n.to_be_bytes()).unwrap();
        f.write_all(labels).unwrap();
        (images_path, labels_path)
    }

    #[test]
    fn idx_roundtrip_shape_and_rescale() {
        let dir = tempfile::tempdir().unwrap();
        let mut pixels = vec![0u8; 2 * 28 * 28];
        pixels[0] = 255;
        pixels[1] = 0;
        pixels[2] = 51;
        let (images, labels) = write_idx_pair(dir.path(), &pixels, &[3, 8], 28, 28);
        let ds = load_idx(&images, &labels).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 784);
        assert_eq!(ds.features.get(0, 0), 1.0);
        assert_eq!(ds.features.get(0, 1), 0.0);
        assert!((ds.features.get(0, 2) - 0.2).abs() < 1e-12);
        assert_eq!(ds.fine_labels, vec![3, 8]);
    }

    #[test]
    fn idx_wrong_magic_names_observed_value() {
        let dir = tempfile::tempdir().unwrap();
        let images_path = dir.path().join("bad.idx");
        let mut f = File::create(&images_path).unwrap();
        f.write_all(&0x0000_0777u32.to_be_bytes()).unwrap();
        f.write_all(&[0u8; 12]).unwrap();
        let labels_path = dir.path().join("labels.idx");
        let mut f = File::create(&labels_path).unwrap();
        f.write_all(&0x0000_0801u32.to_be_bytes()).unwrap();
        f.write_all(&0u32.to_be_bytes()).unwrap();
        let err = load_idx(&images_path, &labels_path).unwrap_err();
        match err {
            Error::Format(msg) => assert!(msg.contains("0x00000777"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn idx_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (images, _) = write_idx_pair(dir.path(), &vec![0u8; 2 * 4], &[1, 2], 2, 2);
        // A label file declaring 3 entries.
        let labels3 = dir.path().join("labels3.idx");
        let mut f = File::create(&labels3).unwrap();
        f.write_all(&0x0000_0801u32.to_be_bytes()).unwrap();
        f.write_all(&3u32.to_be_bytes()).unwrap();
        f.write_all(&[1, 2, 3]).unwrap();
        assert!(matches!(
            load_idx(&images, &labels3),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn grouping_threshold_five() {
        let ds = gen_blobs(3, 10, 4, 1.0, 0.05, 5).unwrap();
        let regrouped = apply_grouping(&ds, &GroupMapping::Threshold(5)).unwrap();
        for (fine, group) in regrouped.fine_labels.iter().zip(&regrouped.group_labels) {
            assert_eq!(*group, u8::from(*fine >= 5));
        }
    }

    #[test]
    fn grouping_is_idempotent() {
        let ds = gen_blobs(3, 4, 4, 1.0, 0.05, 5).unwrap();
        let mapping = GroupMapping::Table(vec![0, 1, 1, 0]);
        let once = apply_grouping(&ds, &mapping).unwrap();
        let twice = apply_grouping(&once, &mapping).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn grouping_rejects_all_to_one_and_uncovered() {
        let ds = gen_blobs(3, 4, 4, 1.0, 0.05, 5).unwrap();
        assert!(matches!(
            apply_grouping(&ds, &GroupMapping::Table(vec![0, 0, 0, 0])),
            Err(Error::Mapping(_))
        ));
        assert!(matches!(
            apply_grouping(&ds, &GroupMapping::Table(vec![0, 1])),
            Err(Error::Mapping(_))
        ));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = gen_blobs(100, 10, 4, 1.0, 0.1, 3).unwrap();
        let (train, val, test) = split(&ds, (0.8, 0.1, 0.1), 11).unwrap();
        assert_eq!(train.len(), 800);
        assert_eq!(val.len(), 100);
        assert_eq!(test.len(), 100);
        let (train2, _, _) = split(&ds, (0.8, 0.1, 0.1), 11).unwrap();
        assert_eq!(train, train2);
    }

    #[test]
    fn split_parts_form_the_original_multiset() {
        let ds = gen_blobs(10, 4, 3, 1.0, 0.1, 13).unwrap();
        let (train, val, test) = split(&ds, (0.5, 0.25, 0.25), 17).unwrap();
        let mut original: Vec<Vec<u64>> = (0..ds.len())
            .map(|i| {
                ds.features
                    .row(i)
                    .iter()
                    .map(|v| v.to_bits())
                    .chain([ds.fine_labels[i] as u64, ds.group_labels[i] as u64])
                    .collect()
            })
            .collect();
        let mut recombined: Vec<Vec<u64>> = Vec::new();
        for part in [&train, &val, &test] {
            for i in 0..part.len() {
                recombined.push(
                    part.features
                        .row(i)
                        .iter()
                        .map(|v| v.to_bits())
                        .chain([part.fine_labels[i] as u64, part.group_labels[i] as u64])
                        .collect(),
                );
            }
        }
        original.sort();
        recombined.sort();
        assert_eq!(original, recombined);
    }

    #[test]
    fn split_rejects_degenerate_and_bad_fractions() {
        let ds = gen_blobs(2, 2, 2, 1.0, 0.05, 19).unwrap();
        assert!(split(&ds, (0.9, 0.05, 0.05), 1).is_err());
        assert!(split(&ds, (0.5, 0.2, 0.2), 1).is_err());
        assert!(split(&ds, (0.5, 0.5, 0.0), 1).is_err());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let ds = gen_blobs(6, 4, 3, 1.3, 0.2, 23).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        save_csv(&ds, &path).unwrap();
        let loaded = load_csv(&path).unwrap();
        assert_eq!(ds.features, loaded.features);
        assert_eq!(ds.fine_labels, loaded.fine_labels);
        assert_eq!(ds.group_labels, loaded.group_labels);
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b,fine_label,group_label\n1,2,0,0\n").unwrap();
        assert!(matches!(load_csv(&path), Err(Error::Format(_))));
    }
}
