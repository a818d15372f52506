//! Random network distillation bonus.
//!
//! A frozen, randomly initialized target net embeds whitened observations; a
//! predictor is trained to match it. The bonus for `s_{t+1}` is the squared
//! embedding error, which stays high on inputs unlike those trained on.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bonus::{ExplorationBonus, TransitionBatch};
use crate::envs::VecEnv;
use crate::error::{Error, Result};
use crate::numnet::{AdamConfig, AdamState, DenseNet, InitScheme, NetSpec};
use crate::rng::{derive_seed, stream, stream_rng, StreamRng};
use crate::stats::RunningMeanStd;

/// How the squared error is reduced over embedding dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

impl Reduction {
    fn scale(self, k: usize) -> f64 {
        match self {
            Reduction::Mean => 1.0 / k as f64,
            Reduction::Sum => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RndConfig {
    pub embedding_dim: usize,
    /// Hidden layers of the target; the predictor gets one extra layer of the last width.
    pub hidden: Vec<usize>,
    pub predictor_extra_layer: bool,
    pub keep_prob: f64,
    pub learning_rate: f64,
    pub reduction: Reduction,
    pub target_init: InitScheme,
    pub predictor_init: InitScheme,
}

impl Default for RndConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 64,
            hidden: vec![64, 64],
            predictor_extra_layer: true,
            keep_prob: 1.0,
            learning_rate: 1e-4,
            reduction: Reduction::Mean,
            target_init: InitScheme::ScaledUniform,
            predictor_init: InitScheme::ScaledUniform,
        }
    }
}

impl RndConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::InvalidArgument(format!("keep_prob {} not in (0, 1]", self.keep_prob)));
        }
        if self.embedding_dim == 0 {
            return Err(Error::InvalidArgument("embedding_dim must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn target_sizes(&self, input: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(&self.hidden);
        sizes.push(self.embedding_dim);
        sizes
    }

    pub(crate) fn predictor_sizes(&self, input: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(&self.hidden);
        if self.predictor_extra_layer {
            sizes.push(self.hidden.last().copied().unwrap_or(self.embedding_dim));
        }
        sizes.push(self.embedding_dim);
        sizes
    }
}

/// Per-row reduced squared error between two embedding batches.
pub fn embedding_error(pred: &Array2<f64>, target: &Array2<f64>, reduction: Reduction) -> Array1<f64> {
    let scale = reduction.scale(pred.ncols());
    let mut diff = pred - target;
    diff.mapv_inplace(|d| d * d);
    diff.sum_axis(Axis(1)) * scale
}

/// Indices retained by independent Bernoulli(keep_prob) draws.
pub fn bernoulli_keep<R: Rng + ?Sized>(n: usize, keep_prob: f64, rng: &mut R) -> Vec<usize> {
    (0..n).filter(|_| rng.random::<f64>() < keep_prob).collect()
}

/// One Adam step regressing `net(inputs)` onto `targets` under the reduced
/// squared error averaged over rows. Returns the pre-step loss.
pub fn regression_step(
    net: &mut DenseNet,
    opt: &mut AdamState,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    reduction: Reduction,
) -> Result<f64> {
    let (pred, cache) = net.forward(inputs)?;
    if pred.dim() != targets.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.dim(),
            targets.dim()
        )));
    }
    let rows = pred.nrows() as f64;
    let scale = reduction.scale(pred.ncols());
    let diff = &pred - &targets;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() * scale / rows;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("regression loss {loss}")));
    }
    let d_out = diff * (2.0 * scale / rows);
    let (grads, _) = net.backward(&cache, d_out.view())?;
    opt.step(net, &grads)?;
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RndBonus {
    target: DenseNet,
    predictor: DenseNet,
    obs_rms: RunningMeanStd,
    optimizer: AdamState,
    keep_prob: f64,
    reduction: Reduction,
    dropout_rng: StreamRng,
}

impl RndBonus {
    pub fn new(obs_dim: usize, config: &RndConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let target = DenseNet::new(
            NetSpec::new(config.target_sizes(obs_dim), config.target_init),
            derive_seed(seed, stream::TARGET_INIT),
        )?
        .frozen();
        let predictor = DenseNet::new(
            NetSpec::new(config.predictor_sizes(obs_dim), config.predictor_init),
            derive_seed(seed, stream::PREDICTOR_INIT),
        )?;
        Self::from_nets(target, predictor, config, seed)
    }

    /// Assembles a bonus from explicit nets. The target is frozen here.
    pub fn from_nets(target: DenseNet, predictor: DenseNet, config: &RndConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if target.input_dim() != predictor.input_dim() || target.output_dim() != predictor.output_dim() {
            return Err(Error::Shape(format!(
                "target {:?} and predictor {:?} disagree on input/embedding dims",
                target.layer_sizes(),
                predictor.layer_sizes()
            )));
        }
        let predictor = predictor.with_trainable(true);
        let optimizer = AdamState::new(&predictor, AdamConfig::with_lr(config.learning_rate));
        Ok(Self {
            obs_rms: RunningMeanStd::new(target.input_dim()),
            target: target.frozen(),
            predictor,
            optimizer,
            keep_prob: config.keep_prob,
            reduction: config.reduction,
            dropout_rng: stream_rng(seed, stream::DROPOUT),
        })
    }

    pub fn target(&self) -> &DenseNet {
        &self.target
    }

    pub fn predictor(&self) -> &DenseNet {
        &self.predictor
    }

    pub fn obs_rms(&self) -> &RunningMeanStd {
        &self.obs_rms
    }

    pub fn embedding_dim(&self) -> usize {
        self.target.output_dim()
    }

    pub fn keep_prob(&self) -> f64 {
        self.keep_prob
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.optimizer
    }

    pub fn update_obs_norm(&mut self, obs: ArrayView2<f64>) -> Result<()> {
        self.obs_rms.update(obs)
    }

    /// Bonus for each successor observation; read-only.
    pub fn intrinsic_reward(&self, next_obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        let z = self.obs_rms.normalize(next_obs)?;
        let target = self.target.predict(z.view())?;
        let pred = self.predictor.predict(z.view())?;
        Ok(embedding_error(&pred, &target, self.reduction))
    }

    /// Distillation loss over the whole batch, no dropout, no update.
    pub fn distillation_loss(&self, obs: ArrayView2<f64>) -> Result<f64> {
        let r = self.intrinsic_reward(obs)?;
        Ok(r.mean().unwrap_or(0.0))
    }

    /// Bernoulli(keep_prob) experience dropout, then one Adam step on the kept rows.
    pub fn train_predictor(&mut self, obs: ArrayView2<f64>) -> Result<Option<f64>> {
        if obs.nrows() == 0 {
            return Err(Error::InvalidArgument("predictor batch is empty".into()));
        }
        let kept = bernoulli_keep(obs.nrows(), self.keep_prob, &mut self.dropout_rng);
        if kept.is_empty() {
            return Ok(None);
        }
        let z = self.obs_rms.normalize(obs.select(Axis(0), &kept).view())?;
        let target = self.target.predict(z.view())?;
        regression_step(
            &mut self.predictor,
            &mut self.optimizer,
            z.view(),
            target.view(),
            self.reduction,
        )
        .map(Some)
    }

    /// Steps `env` with uniform random actions for `m_steps`, feeding every
    /// successor observation to the normalizer, then resets `env` with `reset_seed`.
    pub fn warmup_obs_norm<R: Rng + ?Sized>(
        &mut self,
        env: &mut VecEnv,
        m_steps: usize,
        rng: &mut R,
        reset_seed: u64,
    ) -> Result<()> {
        let obs = random_walk_observations(env, m_steps, rng)?;
        self.obs_rms.update(obs.view())?;
        env.reset(reset_seed);
        Ok(())
    }
}

/// Successor observations of `m_steps` uniform-random steps in every env, row
/// order `(step, env)`.
pub fn random_walk_observations<R: Rng + ?Sized>(env: &mut VecEnv, m_steps: usize, rng: &mut R) -> Result<Array2<f64>> {
    if m_steps == 0 {
        return Err(Error::InvalidArgument("warm-up needs at least one step".into()));
    }
    let n = env.num_envs();
    let mut out = Array2::zeros((m_steps * n, env.obs_dim()));
    for t in 0..m_steps {
        let actions: Vec<usize> = (0..n).map(|_| rng.random_range(0..env.num_actions())).collect();
        let step = env.step(&actions)?;
        out.slice_mut(ndarray::s![t * n..(t + 1) * n, ..]).assign(&step.next_obs);
    }
    Ok(out)
}

impl ExplorationBonus for RndBonus {
    fn observe(&mut self, next_obs: ArrayView2<f64>) -> Result<()> {
        self.update_obs_norm(next_obs)
    }

    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>> {
        self.intrinsic_reward(batch.next_obs)
    }

    fn train_step(&mut self, batch: &TransitionBatch<'_>) -> Result<Option<f64>> {
        self.train_predictor(batch.next_obs)
    }
}
