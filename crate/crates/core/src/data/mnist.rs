//! Labeled image sets: the standard four-file MNIST layout and a synthetic
//! stand-in with the same shape.

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::idx::{encode_idx, parse_idx, IdxData, IdxTensor};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_DIM: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const NUM_CLASSES: usize = 10;

/// Images flattened to rows with pixels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub images: Array2<f64>,
    pub labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn indices_of(&self, class: u8) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn class_count(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    pub fn select(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            images: self.images.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplits {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn mnist_files_present(dir: &Path) -> bool {
    [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS]
        .iter()
        .all(|f| dir.join(f).is_file())
}

fn read_tensor(path: &Path) -> Result<IdxTensor> {
    let bytes = std::fs::read(path)?;
    Ok(parse_idx(&bytes)?)
}

fn to_dataset(images: IdxTensor, labels: IdxTensor, name: &str) -> Result<LabeledDataset> {
    let (IdxData::U8(pixels), IdxData::U8(label_bytes)) = (images.data, labels.data) else {
        return Err(Error::InvalidArgument(format!("{name}: MNIST files must hold unsigned bytes")));
    };
    if images.dims.len() != 3 || labels.dims.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{name}: expected (n, rows, cols) images and (n) labels, got {:?} and {:?}",
            images.dims, labels.dims
        )));
    }
    let n = images.dims[0];
    if labels.dims[0] != n {
        return Err(Error::InvalidArgument(format!(
            "{name}: {n} images but {} labels",
            labels.dims[0]
        )));
    }
    if let Some(&bad) = label_bytes.iter().find(|&&l| l as usize >= NUM_CLASSES) {
        return Err(Error::InvalidArgument(format!("{name}: label {bad} out of range")));
    }
    let dim = images.dims[1] * images.dims[2];
    let images = Array2::from_shape_vec((n, dim), pixels.into_iter().map(|p| p as f64 / 255.0).collect())
        .map_err(|e| Error::Shape(e.to_string()))?;
    Ok(LabeledDataset {
        images,
        labels: label_bytes,
    })
}

/// Reads the four standard IDX files from `dir`.
pub fn load_mnist_dir(dir: &Path) -> Result<DatasetSplits> {
    let train = to_dataset(
        read_tensor(&dir.join(TRAIN_IMAGES))?,
        read_tensor(&dir.join(TRAIN_LABELS))?,
        "train",
    )?;
    let test = to_dataset(
        read_tensor(&dir.join(TEST_IMAGES))?,
        read_tensor(&dir.join(TEST_LABELS))?,
        "test",
    )?;
    Ok(DatasetSplits { train, test })
}

fn encode_split(ds: &LabeledDataset, side: usize) -> (Vec<u8>, Vec<u8>) {
    let pixels = ds.images.iter().map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let images = IdxTensor::new(vec![ds.len(), side, side], IdxData::U8(pixels)).expect("consistent dims");
    let labels = IdxTensor::new(vec![ds.len()], IdxData::U8(ds.labels.clone())).expect("consistent dims");
    (encode_idx(&images), encode_idx(&labels))
}

/// Writes `splits` in the four-file layout; images must be square.
pub fn write_mnist_dir(dir: &Path, splits: &DatasetSplits) -> Result<()> {
    let side = (splits.train.images.ncols() as f64).sqrt() as usize;
    if side * side != splits.train.images.ncols() {
        return Err(Error::Shape("images are not square".into()));
    }
    std::fs::create_dir_all(dir)?;
    let (ti, tl) = encode_split(&splits.train, side);
    let (vi, vl) = encode_split(&splits.test, side);
    std::fs::write(dir.join(TRAIN_IMAGES), ti)?;
    std::fs::write(dir.join(TRAIN_LABELS), tl)?;
    std::fs::write(dir.join(TEST_IMAGES), vi)?;
    std::fs::write(dir.join(TEST_LABELS), vl)?;
    Ok(())
}

/// Gaussian class prototypes plus per-sample pixel noise, clipped to [0, 1].
#[derive(Debug, Clone)]
pub struct SyntheticDigits {
    prototypes: Array2<f64>,
    noise: f64,
    seed: u64,
}

impl SyntheticDigits {
    pub fn new(seed: u64) -> Self {
        let mut rng = stream_rng(derive_seed(seed, 0x5EED), 0);
        let prototypes = Array2::from_shape_fn((NUM_CLASSES, IMAGE_DIM), |_| {
            (0.5 + 0.25 * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0)
        });
        Self {
            prototypes,
            noise: 0.15,
            seed,
        }
    }

    pub fn sample(&self, class: u8, count: usize, stream: u64) -> LabeledDataset {
        let mut rng = stream_rng(derive_seed(self.seed, class as u64 + 1), stream);
        let proto = self.prototypes.row(class as usize);
        let images = Array2::from_shape_fn((count, IMAGE_DIM), |(_, j)| {
            (proto[j] + self.noise * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0)
        });
        LabeledDataset {
            images,
            labels: vec![class; count],
        }
    }

    /// Train/test splits for the listed classes.
    pub fn splits(&self, classes: &[u8], train_per_class: usize, test_per_class: usize) -> DatasetSplits {
        let concat = |parts: Vec<LabeledDataset>| {
            let views: Vec<_> = parts.iter().map(|p| p.images.view()).collect();
            LabeledDataset {
                images: ndarray::concatenate(Axis(0), &views).expect("same width"),
                labels: parts.iter().flat_map(|p| p.labels.clone()).collect(),
            }
        };
        DatasetSplits {
            train: concat(classes.iter().map(|&c| self.sample(c, train_per_class, 0)).collect()),
            test: concat(classes.iter().map(|&c| self.sample(c, test_per_class, 1)).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_shapes_and_range() {
        let s = SyntheticDigits::new(0).splits(&[0, 3], 20, 5);
        assert_eq!(s.train.images.dim(), (40, IMAGE_DIM));
        assert_eq!(s.test.len(), 10);
        assert_eq!(s.train.class_count(3), 20);
        assert!(s.train.images.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn four_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = SyntheticDigits::new(1).splits(&[0, 1, 2], 4, 2);
        write_mnist_dir(dir.path(), &s).unwrap();
        assert!(mnist_files_present(dir.path()));
        let back = load_mnist_dir(dir.path()).unwrap();
        assert_eq!(back.train.labels, s.train.labels);
        assert_eq!(back.test.images.dim(), (6, IMAGE_DIM));
        for (a, b) in back.train.images.iter().zip(s.train.images.iter()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}
