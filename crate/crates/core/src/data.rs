//! Datasets: embedded Iris, MNIST from IDX files, and seeded minibatching.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const IRIS_CSV: &str = include_str!("../data/iris.csv");

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Samples as rows of `features`, with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, class_count: usize, split: Split) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Data(format!("label {bad} ≥ class count {class_count}")));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            features,
            labels,
            class_count,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Rows `idx` stacked into a batch matrix, with their labels.
    pub fn gather(&self, idx: &[usize]) -> (Matrix, Vec<usize>) {
        let d = self.dim();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.features.row(i));
        }
        let x = Matrix::new(idx.len(), d, data).expect("non-empty gather");
        (x, idx.iter().map(|&i| self.labels[i]).collect())
    }

    /// The first `n` samples (all of them if `n ≥ len`).
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        let (features, labels) = self.gather(&idx);
        Dataset {
            features,
            labels,
            class_count: self.class_count,
            split: self.split,
        }
    }
}

/// Index batches for one epoch: a permutation keyed by `(seed, epoch)`,
/// chunked with the final short batch kept.
pub fn batches(len: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch_size must be ≥ 1");
    let mut idx: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    idx.shuffle(&mut rng);
    idx.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// The embedded Iris table, unstandardized: 150 × 4 features and labels.
pub fn iris_raw() -> (Matrix, Vec<usize>) {
    let mut lines = IRIS_CSV.lines();
    let header: Vec<&str> = lines.next().expect("iris header").split(',').collect();
    let dim: usize = header[1].parse().expect("iris dim");
    let (mut data, mut labels) = (Vec::new(), Vec::new());
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        data.extend(f[..dim].iter().map(|v| v.parse::<f64>().expect("iris value")));
        labels.push(f[dim].trim().parse().expect("iris label"));
    }
    (Matrix::new(labels.len(), dim, data).unwrap(), labels)
}

/// Stratified split: per class, a seeded shuffle puts `⌊n_c/5⌋` samples in
/// the test set. Returns `(train, test)` index lists.
pub fn stratified_split(labels: &[usize], class_count: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..class_count {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let n_test = members.len() / 5;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    (train, test)
}

/// Iris with a stratified 80/20 split (40/10 per class) and per-feature
/// standardization using training statistics only.
pub fn load_iris(seed: u64) -> (Dataset, Dataset) {
    let (x, labels) = iris_raw();
    let (train, test) = stratified_split(&labels, 3, seed);
    let dim = x.cols();
    let (mean, std) = column_stats(train.iter().map(|&i| x.row(i)), dim);
    let build = |idx: &[usize], split| {
        let mut data = Vec::with_capacity(idx.len() * dim);
        for &i in idx {
            data.extend(x.row(i).iter().enumerate().map(|(j, v)| (v - mean[j]) / std[j]));
        }
        let features = Matrix::new(idx.len(), dim, data).unwrap();
        let y = idx.iter().map(|&i| labels[i]).collect();
        Dataset::new(features, y, 3, split).unwrap()
    };
    (build(&train, Split::Train), build(&test, Split::Test))
}

/// Population mean and standard deviation of each column.
pub fn column_stats<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut n = 0usize;
    let mut mean = vec![0.0; dim];
    for r in rows.clone() {
        n += 1;
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; dim];
    for r in rows {
        var.iter_mut()
            .zip(r.iter().zip(&mean))
            .for_each(|(s, (v, m))| *s += (v - m) * (v - m));
    }
    let std = var.iter().map(|s| (s / n as f64).sqrt()).collect();
    (mean, std)
}

/// Workspace default for the MNIST directory: `$LIPCERT_MNIST_DIR`, else
/// `data/mnist` under the workspace root.
pub fn default_mnist_dir() -> PathBuf {
    if let Some(d) = std::env::var_os("LIPCERT_MNIST_DIR") {
        return PathBuf::from(d);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

/// MNIST train/test from the four IDX files in `dir` (optionally `.gz`).
/// Pixels are scaled to `[0, 1]` by `/255`.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset)> {
    let train = load_mnist_split(dir, "train", Split::Train)?;
    let test = load_mnist_split(dir, "t10k", Split::Test)?;
    Ok((train, test))
}

fn load_mnist_split(dir: &Path, prefix: &str, split: Split) -> Result<Dataset> {
    let images = read_maybe_gz(&find_file(dir, &format!("{prefix}-images-idx3-ubyte"))?)?;
    let labels = read_maybe_gz(&find_file(dir, &format!("{prefix}-labels-idx1-ubyte"))?)?;
    let features = parse_idx_images(&images)?;
    let labels = parse_idx_labels(&labels)?;
    if features.rows() != labels.len() {
        return Err(Error::Data(format!(
            "{prefix}: {} images but {} labels",
            features.rows(),
            labels.len()
        )));
    }
    Dataset::new(features, labels, 10, split)
}

fn find_file(dir: &Path, stem: &str) -> Result<PathBuf> {
    for name in [stem.to_string(), format!("{stem}.gz"), stem.replacen("-idx", ".idx", 1)] {
        let p = dir.join(&name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Error::Data(format!("{stem} not found in {}", dir.display())))
}

/// File contents, transparently gunzipped when the gzip magic is present.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::ShortRead(bytes.len()))
}

/// IDX image file (magic 2051) to an `n × (rows·cols)` matrix scaled by 1/255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Matrix> {
    if be_u32(bytes, 0).map_err(|_| Error::NotIdx)? != IDX_IMAGES_MAGIC {
        return Err(Error::NotIdx);
    }
    let n = be_u32(bytes, 4)? as usize;
    let r = be_u32(bytes, 8)? as usize;
    let c = be_u32(bytes, 12)? as usize;
    let need = 16 + n * r * c;
    if bytes.len() < need || n == 0 || r * c == 0 {
        return Err(Error::ShortRead(bytes.len().min(need)));
    }
    let data = bytes[16..need].iter().map(|&b| f64::from(b) / 255.0).collect();
    Matrix::new(n, r * c, data)
}

/// IDX label file (magic 2049) to class indices.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    if be_u32(bytes, 0).map_err(|_| Error::NotIdx)? != IDX_LABELS_MAGIC {
        return Err(Error::NotIdx);
    }
    let n = be_u32(bytes, 4)? as usize;
    let need = 8 + n;
    if bytes.len() < need {
        return Err(Error::ShortRead(bytes.len()));
    }
    Ok(bytes[8..need].iter().map(|&b| b as usize).collect())
}
