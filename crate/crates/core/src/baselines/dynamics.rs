use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::bonus::{ExplorationBonus, TransitionBatch};
use crate::error::{Error, Result};
use crate::numnet::{AdamConfig, AdamState, DenseNet, NetSpec};
use crate::rnd::{bernoulli_keep, embedding_error, regression_step, Reduction, RndConfig};
use crate::rng::{derive_seed, stream, stream_rng, StreamRng};
use crate::stats::RunningMeanStd;

/// Forward-dynamics bonus: predict the frozen random features of `s_{t+1}`
/// from `(s_t, a_t)`. Shares architecture, optimizer and dropout with RND.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsBonus {
    features: DenseNet,
    predictor: DenseNet,
    num_actions: usize,
    obs_rms: RunningMeanStd,
    optimizer: AdamState,
    keep_prob: f64,
    reduction: Reduction,
    dropout_rng: StreamRng,
}

impl DynamicsBonus {
    pub fn new(obs_dim: usize, num_actions: usize, config: &RndConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let features = DenseNet::new(
            NetSpec::new(config.target_sizes(obs_dim), config.target_init),
            derive_seed(seed, stream::TARGET_INIT),
        )?
        .frozen();
        let predictor = DenseNet::new(
            NetSpec::new(config.predictor_sizes(obs_dim + num_actions), config.predictor_init),
            derive_seed(seed, stream::PREDICTOR_INIT),
        )?;
        Self::from_nets(features, predictor, num_actions, config, seed)
    }

    pub fn from_nets(
        features: DenseNet,
        predictor: DenseNet,
        num_actions: usize,
        config: &RndConfig,
        seed: u64,
    ) -> Result<Self> {
        if predictor.input_dim() != features.input_dim() + num_actions || predictor.output_dim() != features.output_dim() {
            return Err(Error::Shape(format!(
                "dynamics predictor {:?} must map obs+actions ({} + {num_actions}) to {}",
                predictor.layer_sizes(),
                features.input_dim(),
                features.output_dim()
            )));
        }
        let predictor = predictor.with_trainable(true);
        Ok(Self {
            obs_rms: RunningMeanStd::new(features.input_dim()),
            optimizer: AdamState::new(&predictor, AdamConfig::with_lr(config.learning_rate)),
            features: features.frozen(),
            predictor,
            num_actions,
            keep_prob: config.keep_prob,
            reduction: config.reduction,
            dropout_rng: stream_rng(seed, stream::DROPOUT),
        })
    }

    pub fn features(&self) -> &DenseNet {
        &self.features
    }

    pub fn predictor(&self) -> &DenseNet {
        &self.predictor
    }

    pub fn obs_rms(&self) -> &RunningMeanStd {
        &self.obs_rms
    }

    pub fn update_obs_norm(&mut self, obs: ArrayView2<f64>) -> Result<()> {
        self.obs_rms.update(obs)
    }

    fn predictor_input(&self, obs: ArrayView2<f64>, actions: &[usize]) -> Result<Array2<f64>> {
        if actions.len() != obs.nrows() {
            return Err(Error::Shape(format!("{} actions for {} observations", actions.len(), obs.nrows())));
        }
        let z = self.obs_rms.normalize(obs)?;
        let d = z.ncols();
        let mut input = Array2::zeros((z.nrows(), d + self.num_actions));
        input.slice_mut(s![.., ..d]).assign(&z);
        for (i, &a) in actions.iter().enumerate() {
            if a >= self.num_actions {
                return Err(Error::InvalidArgument(format!("action {a} outside 0..{}", self.num_actions)));
            }
            input[[i, d + a]] = 1.0;
        }
        Ok(input)
    }

    fn target_features(&self, next_obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = self.obs_rms.normalize(next_obs)?;
        self.features.predict(z.view())
    }

    pub fn dynamics_bonus(&self, obs: ArrayView2<f64>, actions: &[usize], next_obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        let input = self.predictor_input(obs, actions)?;
        let pred = self.predictor.predict(input.view())?;
        let target = self.target_features(next_obs)?;
        Ok(embedding_error(&pred, &target, self.reduction))
    }

    pub fn train(&mut self, obs: ArrayView2<f64>, actions: &[usize], next_obs: ArrayView2<f64>) -> Result<Option<f64>> {
        if obs.nrows() == 0 {
            return Err(Error::InvalidArgument("dynamics batch is empty".into()));
        }
        let kept = bernoulli_keep(obs.nrows(), self.keep_prob, &mut self.dropout_rng);
        if kept.is_empty() {
            return Ok(None);
        }
        let kept_actions: Vec<usize> = kept.iter().map(|&i| actions[i]).collect();
        let input = self.predictor_input(obs.select(Axis(0), &kept).view(), &kept_actions)?;
        let target = self.target_features(next_obs.select(Axis(0), &kept).view())?;
        regression_step(
            &mut self.predictor,
            &mut self.optimizer,
            input.view(),
            target.view(),
            self.reduction,
        )
        .map(Some)
    }
}

impl ExplorationBonus for DynamicsBonus {
    fn observe(&mut self, next_obs: ArrayView2<f64>) -> Result<()> {
        self.update_obs_norm(next_obs)
    }

    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>> {
        self.dynamics_bonus(batch.obs, batch.actions, batch.next_obs)
    }

    fn train_step(&mut self, batch: &TransitionBatch<'_>) -> Result<Option<f64>> {
        self.train(batch.obs, batch.actions, batch.next_obs)
    }
}
