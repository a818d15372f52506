use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::bonus::{ExplorationBonus, TransitionBatch};
use crate::error::{Error, Result};
use crate::numnet::{AdamConfig, AdamState, DenseNet, InitScheme, NetSpec};
use crate::rnd::{bernoulli_keep, embedding_error, regression_step, Reduction};
use crate::rng::{derive_seed, stream, stream_rng, StreamRng};
use crate::stats::RunningMeanStd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub hidden: usize,
    /// Defaults to `max(2, obs_dim / 2)`.
    pub bottleneck: Option<usize>,
    pub keep_prob: f64,
    pub learning_rate: f64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            bottleneck: None,
            keep_prob: 1.0,
            learning_rate: 1e-4,
        }
    }
}

/// Reconstruction-error bonus on whitened observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderBonus {
    net: DenseNet,
    obs_rms: RunningMeanStd,
    optimizer: AdamState,
    keep_prob: f64,
    dropout_rng: StreamRng,
}

impl AutoencoderBonus {
    pub fn new(obs_dim: usize, config: &AutoencoderConfig, seed: u64) -> Result<Self> {
        let bottleneck = config.bottleneck.unwrap_or((obs_dim / 2).max(2));
        if !(config.keep_prob > 0.0 && config.keep_prob <= 1.0) {
            return Err(Error::InvalidArgument(format!("keep_prob {} not in (0, 1]", config.keep_prob)));
        }
        let net = DenseNet::new(
            NetSpec::new(
                vec![obs_dim, config.hidden, bottleneck, config.hidden, obs_dim],
                InitScheme::ScaledUniform,
            ),
            derive_seed(seed, stream::PREDICTOR_INIT),
        )?;
        Ok(Self {
            obs_rms: RunningMeanStd::new(obs_dim),
            optimizer: AdamState::new(&net, AdamConfig::with_lr(config.learning_rate)),
            net,
            keep_prob: config.keep_prob,
            dropout_rng: stream_rng(seed, stream::DROPOUT),
        })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn bottleneck(&self) -> usize {
        self.net.layer_sizes()[2]
    }

    pub fn update_obs_norm(&mut self, obs: ArrayView2<f64>) -> Result<()> {
        self.obs_rms.update(obs)
    }

    pub fn autoencoder_bonus(&self, obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        let z = self.obs_rms.normalize(obs)?;
        let recon = self.net.predict(z.view())?;
        Ok(embedding_error(&recon, &z, Reduction::Mean))
    }

    pub fn train(&mut self, obs: ArrayView2<f64>) -> Result<Option<f64>> {
        if obs.nrows() == 0 {
            return Err(Error::InvalidArgument("autoencoder batch is empty".into()));
        }
        let kept = bernoulli_keep(obs.nrows(), self.keep_prob, &mut self.dropout_rng);
        if kept.is_empty() {
            return Ok(None);
        }
        let z = self.obs_rms.normalize(obs.select(Axis(0), &kept).view())?;
        regression_step(&mut self.net, &mut self.optimizer, z.view(), z.view(), Reduction::Mean).map(Some)
    }
}

impl ExplorationBonus for AutoencoderBonus {
    fn observe(&mut self, next_obs: ArrayView2<f64>) -> Result<()> {
        self.update_obs_norm(next_obs)
    }

    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>> {
        self.autoencoder_bonus(batch.next_obs)
    }

    fn train_step(&mut self, batch: &TransitionBatch<'_>) -> Result<Option<f64>> {
        self.train(batch.next_obs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottleneck_defaults() {
        let ae = AutoencoderBonus::new(19, &AutoencoderConfig::default(), 0).unwrap();
        assert_eq!(ae.bottleneck(), 9);
        assert_eq!(ae.net().output_dim(), 19);
        let tiny = AutoencoderBonus::new(3, &AutoencoderConfig::default(), 0).unwrap();
        assert_eq!(tiny.bottleneck(), 2);
    }

    #[test]
    fn untrained_bonus_is_positive() {
        let mut ae = AutoencoderBonus::new(4, &AutoencoderConfig::default(), 1).unwrap();
        let obs = ndarray::array![[0.0, 1.0, 2.0, 3.0], [1.0, 0.0, -1.0, 2.0]];
        ae.update_obs_norm(obs.view()).unwrap();
        assert!(ae.autoencoder_bonus(obs.view()).unwrap().iter().all(|&b| b > 0.0));
    }
}
