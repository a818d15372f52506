use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::sha256_hex;
use crate::data::{
    load_mnist_dir, mnist_files_present, novelty_experiment, write_curve_csv, DatasetSplits, NoveltyConfig,
    NoveltyCurve, SyntheticDigits,
};
use crate::error::{Error, Result};

/// Seeds and data source for a novelty-curve run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoveltyRunConfig {
    pub seeds: Vec<u64>,
    /// Directory holding the four MNIST IDX files; synthetic digits are used when absent.
    pub mnist_dir: Option<PathBuf>,
    pub synthetic_seed: u64,
    pub synthetic_test_per_class: usize,
    pub novelty: NoveltyConfig,
}

impl Default for NoveltyRunConfig {
    fn default() -> Self {
        Self {
            seeds: (0..5).collect(),
            mnist_dir: None,
            synthetic_seed: 0,
            synthetic_test_per_class: 500,
            novelty: NoveltyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Mnist,
    Synthetic,
}

impl NoveltyRunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.to_toml().unwrap_or_default())
    }

    /// MNIST from `mnist_dir` when all four files exist there, else synthetic digits.
    pub fn load_data(&self) -> Result<(DatasetSplits, DataSource)> {
        if let Some(dir) = &self.mnist_dir {
            if mnist_files_present(dir) {
                return Ok((load_mnist_dir(dir)?, DataSource::Mnist));
            }
        }
        let per_class = self.novelty.total_train;
        let splits = SyntheticDigits::new(self.synthetic_seed).splits(
            &[0, self.novelty.target_class],
            per_class,
            self.synthetic_test_per_class,
        );
        Ok((splits, DataSource::Synthetic))
    }
}

/// One curve per seed, optionally written as CSV to `out`.
pub fn run_novelty(cfg: &NoveltyRunConfig, out: Option<&Path>) -> Result<(Vec<NoveltyCurve>, DataSource)> {
    let (data, source) = cfg.load_data()?;
    let hash = cfg.hash();
    let curves = cfg
        .seeds
        .iter()
        .map(|&seed| novelty_experiment(&data, &cfg.novelty, seed, &hash))
        .collect::<Result<Vec<_>>>()?;
    if let Some(path) = out {
        write_curve_csv(std::fs::File::create(path)?, &curves)?;
    }
    Ok((curves, source))
}
