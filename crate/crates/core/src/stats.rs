//! Streaming moments for observation whitening and intrinsic-return scaling.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OBS_CLIP: f64 = 5.0;
pub const STD_EPS: f64 = 1e-8;
const RETURN_STD_FLOOR: f64 = 1e-12;

/// Per-dimension running mean and population variance (parallel Welford merge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMeanStd {
    count: f64,
    mean: Array1<f64>,
    m2: Array1<f64>,
}

impl RunningMeanStd {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: Array1::zeros(dim),
            m2: Array1::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn var(&self) -> Array1<f64> {
        if self.count == 0.0 {
            return Array1::zeros(self.dim());
        }
        self.m2.mapv(|m| (m / self.count).max(0.0))
    }

    pub fn std(&self) -> Array1<f64> {
        self.var().mapv(f64::sqrt)
    }

    /// Merges the moments of `batch` (one sample per row).
    pub fn update(&mut self, batch: ArrayView2<f64>) -> Result<()> {
        if batch.ncols() != self.dim() {
            return Err(Error::Shape(format!(
                "batch has {} columns, normalizer tracks {}",
                batch.ncols(),
                self.dim()
            )));
        }
        let n_b = batch.nrows() as f64;
        if n_b == 0.0 {
            return Ok(());
        }
        let mean_b = batch.mean_axis(Axis(0)).expect("non-empty batch");
        let mut m2_b = Array1::<f64>::zeros(self.dim());
        for row in batch.rows() {
            ndarray::Zip::from(&mut m2_b)
                .and(&row)
                .and(&mean_b)
                .for_each(|acc, &x, &mu| *acc += (x - mu) * (x - mu));
        }
        let n_a = self.count;
        let total = n_a + n_b;
        let delta = &mean_b - &self.mean;
        self.mean = &self.mean + &(&delta * (n_b / total));
        self.m2 = &self.m2 + &m2_b + &(delta.mapv(|d| d * d) * (n_a * n_b / total));
        self.count = total;
        Ok(())
    }

    pub fn update_one(&mut self, x: ArrayView1<f64>) -> Result<()> {
        self.update(x.insert_axis(Axis(0)))
    }

    /// `clip((x - mean) / (std + 1e-8), -5, 5)` per dimension.
    pub fn normalize(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if self.count == 0.0 {
            return Err(Error::InvalidState("observation normalizer has not seen any data".into()));
        }
        if x.ncols() != self.dim() {
            return Err(Error::Shape(format!(
                "observation has {} columns, normalizer tracks {}",
                x.ncols(),
                self.dim()
            )));
        }
        let denom = self.std().mapv(|s| s + STD_EPS);
        let mut z = &x - &self.mean;
        z /= &denom;
        z.mapv_inplace(|v| v.clamp(-OBS_CLIP, OBS_CLIP));
        Ok(z)
    }
}

/// Scales intrinsic rewards by the running std of their discounted forward sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnNormalizer {
    gamma: f64,
    accumulators: Vec<f64>,
    rms: RunningMeanStd,
    reset_on_done: bool,
    centered: bool,
}

/// Output of [`ReturnNormalizer::normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRewards {
    pub rewards: Array2<f64>,
    /// True when the return std was too small to divide by and inputs came back unscaled.
    pub warmup: bool,
}

impl ReturnNormalizer {
    pub fn new(num_envs: usize, gamma: f64) -> Self {
        Self {
            gamma,
            accumulators: vec![0.0; num_envs],
            rms: RunningMeanStd::new(1),
            reset_on_done: false,
            centered: true,
        }
    }

    /// Episodic variant: zero the accumulator after a done flag.
    pub fn with_reset_on_done(mut self, reset: bool) -> Self {
        self.reset_on_done = reset;
        self
    }

    /// Use sqrt(E[r~^2]) instead of the centered std.
    pub fn with_centered(mut self, centered: bool) -> Self {
        self.centered = centered;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.accumulators
    }

    pub fn rms(&self) -> &RunningMeanStd {
        &self.rms
    }

    pub fn return_std(&self) -> f64 {
        let var = self.rms.var()[0];
        if self.centered {
            var.sqrt()
        } else {
            (var + self.rms.mean()[0].powi(2)).sqrt()
        }
    }

    /// Advances each env's accumulator through a (K, E) block of rewards and
    /// folds every visited accumulator value into the running moments.
    pub fn update(&mut self, rewards: ArrayView2<f64>, dones: ArrayView2<f64>) -> Result<()> {
        let (steps, envs) = rewards.dim();
        if envs != self.accumulators.len() || dones.dim() != rewards.dim() {
            return Err(Error::Shape(format!(
                "reward block {:?} / dones {:?} do not match {} envs",
                rewards.dim(),
                dones.dim(),
                self.accumulators.len()
            )));
        }
        let mut seen = Array2::<f64>::zeros((steps * envs, 1));
        for t in 0..steps {
            for e in 0..envs {
                let acc = &mut self.accumulators[e];
                *acc = self.gamma * *acc + rewards[[t, e]];
                seen[[t * envs + e, 0]] = *acc;
                if self.reset_on_done && dones[[t, e]] != 0.0 {
                    *acc = 0.0;
                }
            }
        }
        self.rms.update(seen.view())
    }

    pub fn normalize(&self, rewards: ArrayView2<f64>) -> NormalizedRewards {
        let std = self.return_std();
        if std.is_nan() || std < RETURN_STD_FLOOR {
            return NormalizedRewards {
                rewards: rewards.to_owned(),
                warmup: true,
            };
        }
        NormalizedRewards {
            rewards: rewards.mapv(|r| r / std),
            warmup: false,
        }
    }

    /// Update with the block, then normalize it.
    pub fn normalize_reward(&mut self, rewards: ArrayView2<f64>, dones: ArrayView2<f64>) -> Result<NormalizedRewards> {
        self.update(rewards, dones)?;
        Ok(self.normalize(rewards))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn small_batch_moments() {
        let mut rms = RunningMeanStd::new(1);
        rms.update(array![[1.0], [2.0], [3.0]].view()).unwrap();
        assert!((rms.mean()[0] - 2.0).abs() < 1e-15);
        assert!((rms.var()[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identical_rows_have_zero_variance() {
        let mut rms = RunningMeanStd::new(3);
        let batch = Array2::from_shape_fn((10, 3), |(_, j)| j as f64 * 1.5);
        rms.update(batch.view()).unwrap();
        assert!(rms.var().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standard_normal_samples() {
        let mut rng = stream_rng(42, 0);
        let batch = Array2::from_shape_fn((1000, 1), |_| StandardNormal.sample(&mut rng));
        let mut rms = RunningMeanStd::new(1);
        for chunk in batch.axis_chunks_iter(Axis(0), 37) {
            rms.update(chunk).unwrap();
        }
        assert!(rms.mean()[0].abs() < 0.15);
        assert!((rms.var()[0] - 1.0).abs() < 0.15);
    }

    #[test]
    fn dimension_mismatch_is_a_shape_error() {
        let mut rms = RunningMeanStd::new(2);
        assert!(matches!(rms.update(Array2::zeros((3, 4)).view()), Err(Error::Shape(_))));
    }

    #[test]
    fn normalize_requires_data() {
        let rms = RunningMeanStd::new(2);
        assert!(matches!(rms.normalize(Array2::zeros((1, 2)).view()), Err(Error::InvalidState(_))));
    }

    #[test]
    fn normalize_centers_and_clips() {
        let mut rms = RunningMeanStd::new(2);
        rms.update(array![[0.0, 1.0], [2.0, 1.0]].view()).unwrap();
        // dim 0: mean 1, std 1; dim 1: std 0.
        let z = rms.normalize(array![[1.0, 1.0], [11.0, 1.0], [-30.0, 2.0]].view()).unwrap();
        assert_eq!(z[[0, 0]], 0.0);
        assert_eq!(z[[0, 1]], 0.0);
        assert_eq!(z[[1, 0]], 5.0);
        assert_eq!(z[[2, 0]], -5.0);
        assert_eq!(z[[2, 1]], 5.0);
    }

    #[test]
    fn zero_rewards_stay_zero_during_warmup() {
        let mut rn = ReturnNormalizer::new(2, 0.99);
        let r = Array2::zeros((4, 2));
        let out = rn.normalize_reward(r.view(), Array2::zeros((4, 2)).view()).unwrap();
        assert!(out.warmup);
        assert!(out.rewards.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_stream_stays_positive_and_finite() {
        let mut rn = ReturnNormalizer::new(1, 0.99);
        let r = Array2::from_elem((100, 1), 0.3);
        let dones = Array2::zeros((100, 1));
        for _ in 0..50 {
            let out = rn.normalize_reward(r.view(), dones.view()).unwrap();
            assert!(out.rewards.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }

    #[test]
    fn accumulator_carries_across_dones() {
        let mut rn = ReturnNormalizer::new(1, 0.5);
        rn.update(array![[1.0], [1.0]].view(), array![[1.0], [0.0]].view()).unwrap();
        assert_eq!(rn.accumulators(), &[1.5]);

        let mut episodic = ReturnNormalizer::new(1, 0.5).with_reset_on_done(true);
        episodic.update(array![[1.0], [1.0]].view(), array![[1.0], [0.0]].view()).unwrap();
        assert_eq!(episodic.accumulators(), &[1.0]);
    }

    #[test]
    fn uncentered_std_includes_mean() {
        let mut rn = ReturnNormalizer::new(1, 0.0).with_centered(false);
        rn.update(array![[2.0], [2.0]].view(), Array2::zeros((2, 1)).view()).unwrap();
        assert!((rn.return_std() - 2.0).abs() < 1e-12);
    }
}
