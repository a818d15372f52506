use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{PpoParams, StreamSpec};
use crate::baselines::{AutoencoderConfig, CountBonusForm};
use crate::envs::CorridorConfig;
use crate::error::{Error, Result};
use crate::numnet::AdamConfig;
use crate::rnd::RndConfig;

pub(crate) fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Which exploration bonus drives the intrinsic stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BonusKind {
    None,
    #[default]
    Rnd,
    Dynamics,
    Autoencoder,
    Count,
}

impl std::str::FromStr for BonusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "rnd" => Ok(Self::Rnd),
            "dynamics" => Ok(Self::Dynamics),
            "autoencoder" => Ok(Self::Autoencoder),
            "count" => Ok(Self::Count),
            other => Err(Error::Config(format!(
                "unknown bonus `{other}` (expected rnd, dynamics, autoencoder, count or none)"
            ))),
        }
    }
}

impl std::fmt::Display for BonusKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::None => "none",
            Self::Rnd => "rnd",
            Self::Dynamics => "dynamics",
            Self::Autoencoder => "autoencoder",
            Self::Count => "count",
        };
        f.write_str(s)
    }
}

/// Every constant of a training run.
///
/// `num_updates` is the number of rollouts N; `opt_epochs` is N_opt;
/// `rollout_len` is K; `warmup_steps` is M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub num_envs: usize,
    pub rollout_len: usize,
    pub num_updates: usize,
    pub warmup_steps: usize,
    pub opt_epochs: usize,
    pub minibatches: usize,
    pub gamma_ext: f64,
    pub gamma_int: f64,
    pub gae_lambda: f64,
    pub ext_coef: f64,
    pub int_coef: f64,
    pub ext_episodic: bool,
    pub int_episodic: bool,
    pub clip_eps: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    /// Predictor experience-dropout rate; unset means `min(1, 32 / num_envs)`.
    pub keep_prob: Option<f64>,
    pub normalize_advantages: bool,
    pub dual_value_heads: bool,
    /// Stop updating observation statistics after warm-up.
    pub freeze_obs_norm: bool,
    /// Whiten policy inputs with their own running statistics.
    pub normalize_policy_obs: bool,
    pub return_norm_centered: bool,
    pub return_norm_reset_on_done: bool,
    pub policy_hidden: Vec<usize>,
    pub bonus: BonusKind,
    pub count_form: CountBonusForm,
    /// Write a snapshot every this many updates (0 disables).
    pub snapshot_interval: usize,
    /// Adds elapsed seconds to each log row; breaks byte-identical logs.
    pub log_wall_time: bool,
    pub env: CorridorConfig,
    pub rnd: RndConfig,
    pub autoencoder: AutoencoderConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let num_envs = 16;
        let rollout_len = 128;
        Self {
            seed: 0,
            num_envs,
            rollout_len,
            num_updates: 200_000 / (num_envs * rollout_len),
            warmup_steps: 32,
            opt_epochs: 4,
            minibatches: 4,
            gamma_ext: 0.999,
            gamma_int: 0.99,
            gae_lambda: 0.95,
            ext_coef: 2.0,
            int_coef: 1.0,
            ext_episodic: true,
            int_episodic: false,
            clip_eps: 0.1,
            entropy_coef: 0.001,
            value_coef: 0.5,
            learning_rate: 1e-4,
            keep_prob: None,
            normalize_advantages: true,
            dual_value_heads: true,
            freeze_obs_norm: false,
            normalize_policy_obs: true,
            return_norm_centered: true,
            return_norm_reset_on_done: false,
            policy_hidden: vec![64, 64],
            bonus: BonusKind::Rnd,
            count_form: CountBonusForm::InverseSqrt,
            snapshot_interval: 0,
            log_wall_time: false,
            env: CorridorConfig::default(),
            rnd: RndConfig::default(),
            autoencoder: AutoencoderConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Hard sparse-reward corridor: 10 rooms of 10 cells, and an episode
    /// budget of twice the corridor length.
    pub fn sparse_corridor() -> Self {
        let mut cfg = Self::default();
        cfg.env.room_width = 10;
        cfg.env.max_episode_steps = Some(2 * cfg.env.num_cells());
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Full TOML with every default materialized (including `keep_prob`).
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.resolved()).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copy with derived defaults filled in.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        cfg.keep_prob = Some(self.effective_keep_prob());
        cfg
    }

    /// Hex SHA-256 of the resolved TOML.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_toml().unwrap_or_default())
    }

    pub fn effective_keep_prob(&self) -> f64 {
        self.keep_prob
            .unwrap_or_else(|| (32.0 / self.num_envs.max(1) as f64).min(1.0))
    }

    pub fn frames_per_update(&self) -> usize {
        self.num_envs * self.rollout_len
    }

    pub fn total_frames(&self) -> usize {
        self.frames_per_update() * self.num_updates
    }

    /// Sets `num_updates` to the largest count that fits in `frames`.
    pub fn set_frame_budget(&mut self, frames: usize) {
        self.num_updates = frames / self.frames_per_update();
    }

    pub fn extrinsic_stream(&self) -> StreamSpec {
        StreamSpec {
            gamma: self.gamma_ext,
            gae_lambda: self.gae_lambda,
            episodic: self.ext_episodic,
            reward_coef: self.ext_coef,
        }
    }

    pub fn intrinsic_stream(&self) -> StreamSpec {
        StreamSpec {
            gamma: self.gamma_int,
            gae_lambda: self.gae_lambda,
            episodic: self.int_episodic,
            reward_coef: self.int_coef,
        }
    }

    pub fn ppo_params(&self) -> PpoParams {
        PpoParams {
            epochs: self.opt_epochs,
            minibatches: self.minibatches,
            clip_eps: self.clip_eps,
            entropy_coef: self.entropy_coef,
            value_coef: self.value_coef,
            normalize_advantages: self.normalize_advantages,
            dual_value_heads: self.dual_value_heads,
        }
    }

    pub fn policy_adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.learning_rate)
    }

    /// Bonus-model settings with the run-level keep probability applied.
    pub fn rnd_config(&self) -> RndConfig {
        RndConfig {
            keep_prob: self.effective_keep_prob(),
            ..self.rnd.clone()
        }
    }

    pub fn autoencoder_config(&self) -> AutoencoderConfig {
        AutoencoderConfig {
            keep_prob: self.effective_keep_prob(),
            ..self.autoencoder.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_envs == 0 || self.rollout_len == 0 {
            return bad("num_envs and rollout_len must be positive".into());
        }
        if self.warmup_steps == 0 {
            return bad("warmup_steps must be at least 1".into());
        }
        if self.opt_epochs == 0 || self.minibatches == 0 || self.minibatches > self.frames_per_update() {
            return bad(format!(
                "cannot run {} epochs of {} minibatches over {} samples",
                self.opt_epochs,
                self.minibatches,
                self.frames_per_update()
            ));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad(format!("clip_eps {} not in (0, 1)", self.clip_eps));
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return bad("entropy_coef and value_coef must be non-negative".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if let Some(p) = self.keep_prob {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("keep_prob {p} not in (0, 1]"));
            }
        }
        if self.policy_hidden.contains(&0) {
            return bad("policy_hidden sizes must be positive".into());
        }
        self.extrinsic_stream().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.intrinsic_stream().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.env.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.rnd_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}
