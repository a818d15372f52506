//! Novelty detection by distillation: train a predictor to mimic a random
//! target on a mixture of class-0 and target-class images, then measure its
//! error on held-out target-class images as the mixture proportion varies.

use std::io::{Read, Write};

use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mnist::DatasetSplits;
use crate::error::{Error, Result};
use crate::numnet::{AdamConfig, AdamState, DenseNet, InitScheme, NetSpec};
use crate::rnd::{embedding_error, regression_step, Reduction, RndConfig};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::stats::RunningMeanStd;

pub const CURVE_HEADER: [&str; 3] = ["n", "test_mse", "seed"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoveltyConfig {
    pub target_class: u8,
    /// Number of target-class images in the training mixture.
    pub n_values: Vec<usize>,
    /// Training-set size held fixed across `n_values`; class 0 fills the rest.
    pub total_train: usize,
    pub embedding_dim: usize,
    pub hidden: Vec<usize>,
    pub train_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Cap on held-out target-class images used for evaluation.
    pub max_test: usize,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        Self {
            target_class: 1,
            n_values: vec![10, 100, 1000, 5000],
            total_train: 5000,
            embedding_dim: 32,
            hidden: vec![64, 64],
            train_steps: 800,
            batch_size: 64,
            learning_rate: 1e-3,
            max_test: 1000,
        }
    }
}

impl NoveltyConfig {
    fn validate(&self, data: &DatasetSplits) -> Result<()> {
        if self.target_class == 0 {
            return Err(Error::InvalidArgument("target class must differ from the padding class 0".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "n_values must be strictly increasing: {:?}",
                self.n_values
            )));
        }
        if self.batch_size == 0 || self.train_steps == 0 {
            return Err(Error::InvalidArgument("batch_size and train_steps must be positive".into()));
        }
        let max_n = self.n_values.last().copied().unwrap_or(0);
        let available_target = data.train.class_count(self.target_class);
        let min_n = self.n_values.first().copied().unwrap_or(0);
        let available_zero = data.train.class_count(0);
        if max_n > self.total_train {
            return Err(Error::InvalidArgument(format!(
                "n = {max_n} exceeds the fixed training-set size {}",
                self.total_train
            )));
        }
        if max_n > available_target {
            return Err(Error::InvalidArgument(format!(
                "n = {max_n} needs more target-class images than the {available_target} available"
            )));
        }
        if self.total_train - min_n > available_zero {
            return Err(Error::InvalidArgument(format!(
                "padding needs {} class-0 images, only {available_zero} available",
                self.total_train - min_n
            )));
        }
        if data.test.class_count(self.target_class) == 0 {
            return Err(Error::InvalidArgument("no held-out target-class images".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyCurve {
    pub seed: u64,
    pub config_hash: String,
    /// `(n_target_examples, test_mse)` with strictly increasing `n`.
    pub points: Vec<(usize, f64)>,
}

/// Runs the experiment for one seed. Target/predictor init and the minibatch
/// stream depend only on the seed, so curves differ across `n` only through
/// the training data.
pub fn novelty_experiment(
    data: &DatasetSplits,
    config: &NoveltyConfig,
    seed: u64,
    config_hash: &str,
) -> Result<NoveltyCurve> {
    config.validate(data)?;
    let dim = data.train.images.ncols();
    let mut shuffle_rng = stream_rng(seed, stream::DATA);
    let mut target_idx = data.train.indices_of(config.target_class);
    let mut zero_idx = data.train.indices_of(0);
    target_idx.shuffle(&mut shuffle_rng);
    zero_idx.shuffle(&mut shuffle_rng);
    let test_idx: Vec<usize> = data
        .test
        .indices_of(config.target_class)
        .into_iter()
        .take(config.max_test)
        .collect();
    let test_images = data.test.images.select(Axis(0), &test_idx);

    let rnd_cfg = RndConfig {
        embedding_dim: config.embedding_dim,
        hidden: config.hidden.clone(),
        ..RndConfig::default()
    };
    let target = DenseNet::new(
        NetSpec::new(rnd_cfg.target_sizes(dim), InitScheme::ScaledUniform),
        derive_seed(seed, stream::TARGET_INIT),
    )?
    .frozen();
    let predictor_init = DenseNet::new(
        NetSpec::new(rnd_cfg.predictor_sizes(dim), InitScheme::ScaledUniform),
        derive_seed(seed, stream::PREDICTOR_INIT),
    )?;

    // Whitening statistics come from the whole class-0 + target pool so the
    // input transform is the same for every n.
    let mut pool = target_idx.clone();
    pool.extend_from_slice(&zero_idx);
    let mut rms = RunningMeanStd::new(dim);
    rms.update(data.train.images.select(Axis(0), &pool).view())?;
    let z_test = rms.normalize(test_images.view())?;
    let y_test = target.predict(z_test.view())?;

    let mut points = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        let mut idx: Vec<usize> = target_idx[..n].to_vec();
        idx.extend_from_slice(&zero_idx[..config.total_train - n]);
        let train = data.train.images.select(Axis(0), &idx);

        let z_train = rms.normalize(train.view())?;
        let y_train = target.predict(z_train.view())?;

        let mut predictor = predictor_init.clone();
        let mut opt = AdamState::new(&predictor, AdamConfig::with_lr(config.learning_rate));
        let mut batch_rng = stream_rng(seed, stream::SHUFFLE);
        let rows = z_train.nrows();
        let mut order: Vec<usize> = (0..rows).collect();
        let mut cursor = rows;
        for _ in 0..config.train_steps {
            if cursor + config.batch_size > rows {
                order.shuffle(&mut batch_rng);
                cursor = 0;
            }
            let mb = &order[cursor..cursor + config.batch_size.min(rows)];
            cursor += config.batch_size;
            regression_step(
                &mut predictor,
                &mut opt,
                z_train.select(Axis(0), mb).view(),
                y_train.select(Axis(0), mb).view(),
                Reduction::Mean,
            )?;
        }
        let pred = predictor.predict(z_test.view())?;
        let mse = embedding_error(&pred, &y_test, Reduction::Mean).mean().unwrap_or(f64::NAN);
        points.push((n, mse));
    }
    Ok(NoveltyCurve {
        seed,
        config_hash: config_hash.to_string(),
        points,
    })
}

/// Rows of a curve CSV: `(n, test_mse, seed)`.
pub type CurveRow = (usize, f64, u64);

pub fn write_curve_csv<W: Write>(writer: W, curves: &[NoveltyCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CURVE_HEADER)?;
    for curve in curves {
        for &(n, mse) in &curve.points {
            w.write_record([n.to_string(), mse.to_string(), curve.seed.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(reader: R) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CURVE_HEADER {
        return Err(Error::InvalidArgument(format!("unexpected curve header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse_err = |what: &str| Error::InvalidArgument(format!("bad {what} in curve row {rec:?}"));
        rows.push((
            rec[0].parse().map_err(|_| parse_err("n"))?,
            rec[1].parse().map_err(|_| parse_err("test_mse"))?,
            rec[2].parse().map_err(|_| parse_err("seed"))?,
        ));
    }
    Ok(rows)
}

/// Average ranks (1-based), ties share their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; NaN when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// `(seed, spearman(log n, mse))` in seed order.
    pub per_seed: Vec<(u64, f64)>,
    pub negative: usize,
    pub required: usize,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.negative >= self.required
    }
}

/// Checks that MSE falls with log n in at least `min_fraction` of seeds.
pub fn check_monotonicity(rows: &[CurveRow], min_fraction: f64) -> Result<MonotonicityReport> {
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.2).collect();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("curve has no rows".into()));
    }
    let per_seed: Vec<(u64, f64)> = seeds
        .iter()
        .map(|&s| {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.2 == s)
                .map(|r| ((r.0 as f64).ln(), r.1))
                .unzip();
            (s, spearman(&x, &y))
        })
        .collect();
    let negative = per_seed.iter().filter(|(_, rho)| *rho < 0.0).count();
    let required = (min_fraction * per_seed.len() as f64 - 1e-9).ceil() as usize;
    Ok(MonotonicityReport {
        per_seed,
        negative,
        required,
    })
}
