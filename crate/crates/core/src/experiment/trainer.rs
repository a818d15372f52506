use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::model::BonusModel;
use super::runlog::LogRow;
use crate::agent::{
    combine_advantages, compute_gae, flatten, ppo_update, PolicyNet, PpoBatch, RolloutBuffer, StepRecord,
};
use crate::bonus::{ExplorationBonus, TransitionBatch};
use crate::envs::VecEnv;
use crate::error::{Error, Result};
use crate::numnet::AdamState;
use crate::rnd::random_walk_observations;
use crate::rng::{derive_seed, stream, stream_rng, StreamRng};
use crate::stats::{ReturnNormalizer, RunningMeanStd};

const SNAPSHOT_MAGIC: &str = "rnd-snapshot-v1";
const RESET_SALT: u64 = 0x5EED;

/// Stages of one update, in the order the trainer runs them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Warmup,
    Collect,
    RewardNormUpdate,
    NormalizeIntrinsic,
    Advantages,
    ObsNormUpdate,
    Optimize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub update: usize,
    /// Agent frames, excluding the warm-up random walk.
    pub frames: usize,
    pub goals_total: usize,
    pub first_goal_frame: Option<usize>,
    pub max_room: usize,
    pub obs_norm_updates: usize,
    pub reward_norm_updates: usize,
    pub policy_steps: usize,
    pub bonus_steps: usize,
}

/// PPO with an exploration bonus on a vectorized corridor.
///
/// Generic over the bonus so that the run loop is identical for all of them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trainer<B> {
    config: ExperimentConfig,
    env: VecEnv,
    obs: Array2<f64>,
    policy: PolicyNet,
    policy_opt: AdamState,
    policy_obs_rms: RunningMeanStd,
    bonus: B,
    return_norm: ReturnNormalizer,
    action_rng: StreamRng,
    shuffle_rng: StreamRng,
    counters: Counters,
    visited: BTreeSet<usize>,
    warmed_up: bool,
    #[serde(skip)]
    trace: Vec<Phase>,
}

#[derive(Serialize)]
struct SnapshotRef<'a, B> {
    magic: &'a str,
    config_hash: String,
    trainer: &'a Trainer<B>,
}

#[derive(Deserialize)]
struct Snapshot<B> {
    magic: String,
    config_hash: String,
    trainer: Trainer<B>,
}

impl Trainer<BonusModel> {
    /// Trainer with the bonus selected by `config.bonus`.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let bonus = BonusModel::from_config(config)?;
        Self::new(config, bonus)
    }
}

impl<B: ExplorationBonus> Trainer<B> {
    pub fn new(config: &ExperimentConfig, bonus: B) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let env = VecEnv::new(config.env.clone(), config.num_envs, seed)?;
        let obs = env.observe();
        let policy = PolicyNet::new(
            env.obs_dim(),
            &config.policy_hidden,
            env.num_actions(),
            derive_seed(seed, stream::POLICY_INIT),
        )?;
        let policy_opt = AdamState::new(policy.net(), config.policy_adam());
        let return_norm = ReturnNormalizer::new(config.num_envs, config.gamma_int)
            .with_centered(config.return_norm_centered)
            .with_reset_on_done(config.return_norm_reset_on_done);
        Ok(Self {
            policy_obs_rms: RunningMeanStd::new(env.obs_dim()),
            config: config.clone(),
            env,
            obs,
            policy,
            policy_opt,
            bonus,
            return_norm,
            action_rng: stream_rng(seed, stream::ACTION),
            shuffle_rng: stream_rng(seed, stream::SHUFFLE),
            counters: Counters::default(),
            visited: BTreeSet::new(),
            warmed_up: false,
            trace: Vec::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn policy(&self) -> &PolicyNet {
        &self.policy
    }

    pub fn bonus(&self) -> &B {
        &self.bonus
    }

    pub fn return_normalizer(&self) -> &ReturnNormalizer {
        &self.return_norm
    }

    pub fn states_visited(&self) -> usize {
        self.visited.len()
    }

    /// Phases executed since construction (or since the last resume).
    pub fn trace(&self) -> &[Phase] {
        &self.trace
    }

    /// Changes the update budget, e.g. to extend a resumed run.
    pub fn with_num_updates(mut self, num_updates: usize) -> Self {
        self.config.num_updates = num_updates;
        self
    }

    pub fn is_done(&self) -> bool {
        self.counters.update >= self.config.num_updates
    }

    /// Random-walk `warmup_steps` per env to seed observation statistics, then reset.
    pub fn warmup(&mut self) -> Result<()> {
        if self.warmed_up {
            return Err(Error::InvalidState("warm-up already ran".into()));
        }
        let seed = self.config.seed;
        let mut rng = stream_rng(seed, stream::WARMUP);
        let obs = random_walk_observations(&mut self.env, self.config.warmup_steps, &mut rng)?;
        self.bonus.observe(obs.view())?;
        self.policy_obs_rms.update(obs.view())?;
        self.obs = self.env.reset(derive_seed(seed, RESET_SALT));
        self.counters.obs_norm_updates += 1;
        self.warmed_up = true;
        self.trace.push(Phase::Warmup);
        Ok(())
    }

    fn policy_input(&self, obs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if self.config.normalize_policy_obs {
            self.policy_obs_rms.normalize(obs)
        } else {
            Ok(obs.to_owned())
        }
    }

    /// One rollout followed by one optimization phase.
    pub fn update(&mut self) -> Result<LogRow> {
        if !self.warmed_up {
            self.warmup()?;
        }
        let cfg = self.config.clone();
        let (k, e, d) = (cfg.rollout_len, cfg.num_envs, self.env.obs_dim());
        let mut buf = RolloutBuffer::new(k, e, d);
        let mut inputs = Array2::zeros((k * e, d));
        let mut episodes = 0usize;
        let mut episode_return_sum = 0.0;
        let mut noisy_steps = 0usize;
        let width = cfg.env.room_width;

        for t in 0..k {
            let x = self.policy_input(self.obs.view())?;
            let act = self.policy.act(x.view(), &mut self.action_rng)?;
            let step = self.env.step(&act.actions)?;
            let int = self.bonus.rewards(&TransitionBatch {
                obs: self.obs.view(),
                actions: &act.actions,
                next_obs: step.next_obs.view(),
                next_state_indices: &step.next_state_indices,
            })?;
            if !int.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("intrinsic reward at update {} step {t}", self.counters.update)));
            }
            buf.push(StepRecord {
                obs: self.obs.view(),
                next_obs: step.next_obs.view(),
                actions: &act.actions,
                log_probs: act.log_probs.view(),
                ext_rewards: &step.rewards,
                int_rewards: int.view(),
                dones: &step.dones,
                value_ext: act.value_ext.view(),
                value_int: act.value_int.view(),
                next_state_indices: &step.next_state_indices,
            })?;
            inputs.slice_mut(ndarray::s![t * e..(t + 1) * e, ..]).assign(&x);
            for &s in &step.next_state_indices {
                self.visited.insert(s);
                self.counters.max_room = self.counters.max_room.max(s / width);
            }
            noisy_steps += step.next_on_noisy_tile.iter().filter(|&&b| b).count();
            self.counters.frames += e;
            for ep in &step.episodes {
                episodes += 1;
                episode_return_sum += ep.episode_return;
                if ep.reached_goal {
                    self.counters.goals_total += 1;
                    if self.counters.first_goal_frame.is_none() {
                        self.counters.first_goal_frame = Some(self.counters.frames);
                    }
                }
            }
            self.obs = step.obs;
        }
        self.trace.push(Phase::Collect);

        let x = self.policy_input(self.obs.view())?;
        let boot = self.policy.evaluate(x.view())?;
        buf.bootstrap_ext = boot.value_ext;
        buf.bootstrap_int = boot.value_int;

        self.return_norm.update(buf.int_rewards.view(), buf.dones.view())?;
        self.counters.reward_norm_updates += 1;
        self.trace.push(Phase::RewardNormUpdate);
        let int_norm = self.return_norm.normalize(buf.int_rewards.view()).rewards;
        self.trace.push(Phase::NormalizeIntrinsic);

        let ext_spec = cfg.extrinsic_stream();
        let int_spec = cfg.intrinsic_stream();
        let ext_r = &buf.ext_rewards * ext_spec.reward_coef;
        let int_r = &int_norm * int_spec.reward_coef;
        let (advantages, returns_ext, returns_int) = if cfg.dual_value_heads {
            let (adv_e, ret_e) = compute_gae(
                ext_r.view(),
                buf.value_ext.view(),
                buf.bootstrap_ext.view(),
                buf.dones.view(),
                &ext_spec,
            )?;
            let (adv_i, ret_i) = compute_gae(
                int_r.view(),
                buf.value_int.view(),
                buf.bootstrap_int.view(),
                buf.dones.view(),
                &int_spec,
            )?;
            (combine_advantages(adv_e.view(), adv_i.view(), 1.0, 1.0)?, ret_e, ret_i)
        } else {
            let total = &ext_r + &int_r;
            let (adv, ret) = compute_gae(
                total.view(),
                buf.value_ext.view(),
                buf.bootstrap_ext.view(),
                buf.dones.view(),
                &ext_spec,
            )?;
            (adv, ret, Array2::zeros((k, e)))
        };
        self.trace.push(Phase::Advantages);

        let flat_obs = buf.flat_obs();
        let flat_next_obs = buf.flat_next_obs();
        if !cfg.freeze_obs_norm {
            self.bonus.observe(flat_next_obs.view())?;
            self.policy_obs_rms.update(flat_obs.view())?;
            self.counters.obs_norm_updates += 1;
        }
        self.trace.push(Phase::ObsNormUpdate);

        let actions = flatten(&buf.actions);
        let indices = flatten(&buf.next_state_indices);
        let batch = PpoBatch {
            obs: inputs,
            actions,
            old_log_probs: Array1::from(flatten(&buf.log_probs)),
            advantages: Array1::from(flatten(&advantages)),
            returns_ext: Array1::from(flatten(&returns_ext)),
            returns_int: Array1::from(flatten(&returns_int)),
        };
        let bonus = &mut self.bonus;
        let bonus_steps = &mut self.counters.bonus_steps;
        let stats = ppo_update(
            &mut self.policy,
            &mut self.policy_opt,
            &batch,
            &cfg.ppo_params(),
            &mut self.shuffle_rng,
            |idx| {
                let acts: Vec<usize> = idx.iter().map(|&i| batch.actions[i]).collect();
                let next_idx: Vec<usize> = idx.iter().map(|&i| indices[i]).collect();
                let o = flat_obs.select(Axis(0), idx);
                let n = flat_next_obs.select(Axis(0), idx);
                let loss = bonus.train_step(&TransitionBatch {
                    obs: o.view(),
                    actions: &acts,
                    next_obs: n.view(),
                    next_state_indices: &next_idx,
                })?;
                if loss.is_some() {
                    *bonus_steps += 1;
                }
                Ok(loss)
            },
        )?;
        self.counters.policy_steps += stats.optimizer_steps;
        self.trace.push(Phase::Optimize);
        self.counters.update += 1;

        let n = (k * e) as f64;
        Ok(LogRow {
            update: self.counters.update,
            frames: self.counters.frames,
            mean_ext_reward: buf.ext_rewards.sum() / n,
            mean_int_reward: buf.int_rewards.sum() / n,
            mean_int_normalized: int_norm.sum() / n,
            episodes,
            mean_episode_return: if episodes > 0 { episode_return_sum / episodes as f64 } else { 0.0 },
            goals_total: self.counters.goals_total,
            states_visited: self.visited.len(),
            max_room: self.counters.max_room,
            noisy_occupancy: noisy_steps as f64 / n,
            policy_loss: stats.policy_loss,
            value_loss_ext: stats.value_loss_ext,
            value_loss_int: stats.value_loss_int,
            entropy: stats.entropy,
            approx_kl: stats.approx_kl,
            clip_fraction: stats.clip_fraction,
            bonus_loss: stats.aux_loss,
            obs_norm_updates: self.counters.obs_norm_updates,
            reward_norm_updates: self.counters.reward_norm_updates,
            policy_steps: self.counters.policy_steps,
            bonus_steps: self.counters.bonus_steps,
            wall_time: None,
        })
    }
}

impl<B: Serialize + DeserializeOwned> Trainer<B> {
    /// Everything needed to continue the run bit-for-bit.
    pub fn to_snapshot_bytes(&self) -> Result<Vec<u8>> {
        let snap = SnapshotRef {
            magic: SNAPSHOT_MAGIC,
            config_hash: self.config.hash(),
            trainer: self,
        };
        bincode::serialize(&snap).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_snapshot_bytes(bytes: &[u8]) -> Result<Self> {
        let snap: Snapshot<B> = bincode::deserialize(bytes).map_err(|e| Error::Snapshot(e.to_string()))?;
        if snap.magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot(format!("unrecognized snapshot tag `{}`", snap.magic)));
        }
        if snap.trainer.config.hash() != snap.config_hash {
            return Err(Error::Snapshot("config hash does not match the embedded config".into()));
        }
        Ok(snap.trainer)
    }
}
