use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Row-major feature matrix with integer class labels and a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    num_classes: usize,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        num_classes: usize,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let n = labels.len();
        if n_features == 0 || features.len() != n * n_features {
            return Err(Error::Data(format!(
                "feature matrix has {} entries, expected {n} rows of {n_features}",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(
                "feature matrix contains non-finite values".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::Data(format!("label {bad} outside 0..{num_classes}")));
        }
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&test) {
            if i >= n {
                return Err(Error::Data(format!(
                    "split index {i} out of range for {n} rows"
                )));
            }
            if seen[i] {
                return Err(Error::Data(format!(
                    "index {i} appears twice across splits"
                )));
            }
            seen[i] = true;
        }
        if train.is_empty() {
            return Err(Error::Data("train split is empty".into()));
        }
        Ok(Self {
            features,
            n_features,
            labels,
            num_classes,
            train,
            test,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }
}

/// `n` points in `c` Gaussian clusters (unit noise) around random unit-norm
/// centers scaled by `spread`. Labels cycle through the classes so counts
/// differ by at most one; an 80/20 train/test split comes from a seeded
/// shuffle.
pub fn make_blobs(
    n: usize,
    n_features: usize,
    classes: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 || n < classes {
        return Err(Error::Precondition(format!(
            "make_blobs needs n >= classes >= 2, got n={n}, classes={classes}"
        )));
    }
    if n_features == 0 {
        return Err(Error::Precondition(
            "make_blobs needs at least one feature".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let mut c: Vec<f64> = (0..n_features)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = c
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            c.iter_mut().for_each(|v| *v *= spread / norm);
            c
        })
        .collect();

    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut features = Vec::with_capacity(n * n_features);
    for &y in &labels {
        for &c in &centers[y] {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(c + noise);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = n * 4 / 5;
    let test = order.split_off(n_train);
    Dataset::new(features, n_features, labels, classes, order, test)
}

/// Writes a dataset as CSV: columns `f0..f{p-1}` then `label`, rows in index order.
pub fn write_csv_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..dataset.n_features()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    writer.write_record(&header)?;
    for i in 0..dataset.len() {
        let mut record: Vec<String> = dataset.row(i).iter().map(|v| v.to_string()).collect();
        record.push(dataset.label(i).to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads a numeric CSV with a header row. `split_fraction` of the rows (after
/// a seeded shuffle) go to the train split; features are standardized with
/// train-split statistics, and constant columns become 0.
pub fn load_csv_dataset(
    path: impl AsRef<Path>,
    label_column: &str,
    split_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    let path = path.as_ref();
    if !(split_fraction > 0.0 && split_fraction <= 1.0) {
        return Err(Error::Precondition(format!(
            "split_fraction must lie in (0, 1], got {split_fraction}"
        )));
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| {
            Error::Data(format!(
                "no column named {label_column:?} in {}",
                path.display()
            ))
        })?;
    let n_features = headers.len() - 1;
    if n_features == 0 {
        return Err(Error::Data("dataset has no feature columns".into()));
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_error = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.len() != headers.len() {
            return Err(parse_error(format!(
                "expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                parse_error(format!(
                    "column {:?}: {cell:?} is not a number",
                    &headers[j]
                ))
            })?;
            if !value.is_finite() {
                return Err(parse_error(format!(
                    "column {:?}: non-finite value",
                    &headers[j]
                )));
            }
            if j == label_idx {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(parse_error(format!(
                        "label {cell:?} is not a non-negative integer"
                    )));
                }
                labels.push(value as usize);
            } else {
                features.push(value);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }

    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * split_fraction).round() as usize).clamp(1, n);
    let test = order.split_off(n_train);
    standardize(&mut features, n_features, &order);

    let num_classes = labels.iter().max().map_or(1, |m| m + 1).max(2);
    Dataset::new(features, n_features, labels, num_classes, order, test)
}

fn standardize(features: &mut [f64], n_features: usize, train: &[usize]) {
    let count = train.len() as f64;
    for j in 0..n_features {
        let mean = train
            .iter()
            .map(|&i| features[i * n_features + j])
            .sum::<f64>()
            / count;
        let var = train
            .iter()
            .map(|&i| (features[i * n_features + j] - mean).powi(2))
            .sum::<f64>()
            / count;
        let std = var.sqrt();
        let n_rows = features.len() / n_features;
        for i in 0..n_rows {
            let v = &mut features[i * n_features + j];
            *v = if std > 0.0 { (*v - mean) / std } else { 0.0 };
        }
    }
}

/// Mini-batches drawn without replacement: each epoch is a fresh seeded
/// permutation of the train indices, consumed in contiguous chunks. The last
/// chunk of an epoch may be short.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    indices: Vec<usize>,
    batch_size: usize,
    cursor: usize,
    epoch: u64,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    /// `batch_size` is clipped to the number of train indices.
    pub fn new(train: &[usize], batch_size: usize, seed: u64) -> Result<Self> {
        if train.is_empty() || batch_size == 0 {
            return Err(Error::Precondition(
                "batch sampling needs a nonempty train split and batch_size >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices = train.to_vec();
        indices.shuffle(&mut rng);
        Ok(Self {
            batch_size: batch_size.min(indices.len()),
            indices,
            cursor: 0,
            epoch: 0,
            rng,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Returns the epoch the batch belongs to and the batch itself.
    pub fn next_batch(&mut self) -> (u64, &[usize]) {
        if self.cursor >= self.indices.len() {
            self.indices.shuffle(&mut self.rng);
            self.cursor = 0;
            self.epoch += 1;
        }
        let start = self.cursor;
        let end = (start + self.batch_size).min(self.indices.len());
        self.cursor = end;
        (self.epoch, &self.indices[start..end])
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    #[test]
    fn blobs_are_balanced_and_split() {
        let d = make_blobs(103, 4, 5, 2.0, 11).unwrap();
        let mut counts = [0usize; 5];
        d.labels().iter().for_each(|&y| counts[y] += 1);
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 1);
        assert_eq!(d.train().len(), 82);
        assert_eq!(d.test().len(), 21);
    }

    #[test]
    fn blobs_are_deterministic() {
        assert_eq!(
            make_blobs(50, 3, 2, 1.0, 5).unwrap(),
            make_blobs(50, 3, 2, 1.0, 5).unwrap()
        );
        assert_ne!(
            make_blobs(50, 3, 2, 1.0, 5).unwrap(),
            make_blobs(50, 3, 2, 1.0, 6).unwrap()
        );
    }

    #[test]
    fn well_separated_blobs_are_nearest_centroid_separable() {
        let d = make_blobs(400, 6, 4, 100.0, 3).unwrap();
        let p = d.n_features();
        let mut centroids = vec![vec![0.0; p]; 4];
        let mut counts = [0.0; 4];
        for &i in d.train() {
            let y = d.label(i);
            counts[y] += 1.0;
            centroids[y]
                .iter_mut()
                .zip(d.row(i))
                .for_each(|(c, x)| *c += x);
        }
        for (c, n) in centroids.iter_mut().zip(counts) {
            c.iter_mut().for_each(|v| *v /= n);
        }
        for &i in d.test() {
            let dist = |c: &Vec<f64>| {
                c.iter()
                    .zip(d.row(i))
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            };
            let nearest = (0..4)
                .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
                .unwrap();
            assert_eq!(nearest, d.label(i));
        }
    }

    #[test]
    fn blobs_preconditions() {
        assert!(make_blobs(1, 2, 2, 1.0, 0).is_err());
        assert!(make_blobs(10, 2, 1, 1.0, 0).is_err());
    }

    #[test]
    fn dataset_rejects_overlapping_splits() {
        let err = Dataset::new(vec![0.0; 4], 1, vec![0, 1, 0, 1], 2, vec![0, 1], vec![1, 2]);
        assert!(err.is_err());
        let err = Dataset::new(vec![0.0; 2], 1, vec![0, 3], 2, vec![0], vec![1]);
        assert!(err.is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_four_rows_half_split() {
        let f = write_tmp("a,b,y\n1,10,0\n2,20,1\n3,30,0\n4,40,1\n");
        let d1 = load_csv_dataset(f.path(), "y", 0.5, 9).unwrap();
        let d2 = load_csv_dataset(f.path(), "y", 0.5, 9).unwrap();
        assert_eq!(d1.train().len(), 2);
        assert_eq!(d1.test().len(), 2);
        assert_eq!(d1.train(), d2.train());
        assert_eq!(d1.labels(), &[0, 1, 0, 1]);
        for j in 0..2 {
            let mean: f64 = d1.train().iter().map(|&i| d1.row(i)[j]).sum::<f64>() / 2.0;
            assert!(mean.abs() <= 1e-12);
        }
    }

    #[test]
    fn csv_constant_column_becomes_zero() {
        let f = write_tmp("a,y\n5,0\n5,1\n5,0\n");
        let d = load_csv_dataset(f.path(), "y", 1.0, 0).unwrap();
        assert!((0..3).all(|i| d.row(i)[0] == 0.0));
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let f = write_tmp("a,y\n1,0\nx,1\n");
        match load_csv_dataset(f.path(), "y", 0.5, 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_tmp("a,y\n1,0.5\n");
        assert!(matches!(
            load_csv_dataset(f.path(), "y", 0.5, 0),
            Err(Error::Parse { .. })
        ));
        let f = write_tmp("a,y\n1,0\n");
        assert!(load_csv_dataset(f.path(), "label", 0.5, 0).is_err());
    }

    #[test]
    fn sampler_visits_each_index_once_per_epoch() {
        let train: Vec<usize> = (100..110).collect();
        let mut s = BatchSampler::new(&train, 4, 1).unwrap();
        for epoch in 0..3u64 {
            let mut seen = Vec::new();
            for expected_len in [4, 4, 2] {
                let (e, batch) = s.next_batch();
                assert_eq!(e, epoch);
                assert_eq!(batch.len(), expected_len);
                seen.extend_from_slice(batch);
            }
            seen.sort_unstable();
            assert_eq!(seen, train);
        }
    }

    #[test]
    fn sampler_clips_batch_size() {
        let mut s = BatchSampler::new(&[1, 2, 3], 512, 0).unwrap();
        assert_eq!(s.batch_size(), 3);
        assert_eq!(s.next_batch().1.len(), 3);
        assert_eq!(s.next_batch().0, 1);
    }
}
