//! IDX parsing and the MNIST-style novelty experiment.

mod idx;
mod mnist;
mod novelty;

pub use idx::{encode_idx, parse_idx, IdxData, IdxError, IdxTensor, DTYPE_F32, DTYPE_U8};
pub use mnist::{
    load_mnist_dir, mnist_files_present, write_mnist_dir, DatasetSplits, LabeledDataset, SyntheticDigits, IMAGE_DIM,
    NUM_CLASSES, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
pub use novelty::{
    check_monotonicity, novelty_experiment, read_curve_csv, spearman, write_curve_csv, CurveRow, MonotonicityReport,
    NoveltyConfig, NoveltyCurve, CURVE_HEADER,
};
