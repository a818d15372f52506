//! Noisy-TV contrast: RND versus forward dynamics on a room of pure noise.
//!
//! Both bonuses are fit to the same off-policy replay of a uniform random
//! walk, so neither can steer the data. Each training batch holds equal
//! numbers of transitions landing in the noisy room and in the deterministic
//! room. Converged bonuses are then compared on a held-out walk.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{BonusKind, ExperimentConfig};
use super::trainer::Trainer;
use crate::baselines::DynamicsBonus;
use crate::envs::{CorridorConfig, VecEnv};
use crate::error::{Error, Result};
use crate::rnd::{RndBonus, RndConfig};
use crate::rng::{derive_seed, stream, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisyTvConfig {
    pub env: CorridorConfig,
    /// Room whose bonus is compared against the noisy room.
    pub matched_room: usize,
    pub num_envs: usize,
    pub walk_steps: usize,
    pub train_steps: usize,
    /// Transitions per room in each training batch.
    pub batch_per_room: usize,
    pub bonus: RndConfig,
    pub seeds: Vec<u64>,
    /// Agent runs for the occupancy comparison; empty skips them.
    pub agent_seeds: Vec<u64>,
    pub agent: ExperimentConfig,
}

impl Default for NoisyTvConfig {
    fn default() -> Self {
        let agent = ExperimentConfig {
            num_envs: 8,
            rollout_len: 128,
            num_updates: 24,
            learning_rate: 5e-4,
            env: CorridorConfig {
                num_rooms: 4,
                room_width: 5,
                noisy_tile: Some(2),
                sticky_prob: 0.0,
                ..CorridorConfig::default()
            },
            rnd: RndConfig {
                learning_rate: 1e-3,
                ..RndConfig::default()
            },
            ..ExperimentConfig::default()
        };
        Self {
            env: CorridorConfig {
                num_rooms: 2,
                room_width: 5,
                noisy_tile: Some(1),
                sticky_prob: 0.0,
                max_episode_steps: Some(40),
                ..CorridorConfig::default()
            },
            matched_room: 0,
            num_envs: 8,
            walk_steps: 500,
            train_steps: 3000,
            batch_per_room: 32,
            bonus: RndConfig {
                learning_rate: 1e-3,
                ..RndConfig::default()
            },
            seeds: vec![0, 1, 2],
            agent_seeds: Vec::new(),
            agent,
        }
    }
}

impl NoisyTvConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        let noisy = self
            .env
            .noisy_tile
            .ok_or_else(|| Error::InvalidArgument("noisy-TV contrast needs a noisy tile".into()))?;
        if self.matched_room == noisy || self.matched_room >= self.env.num_rooms {
            return Err(Error::InvalidArgument(format!(
                "matched room {} must be a different room in 0..{}",
                self.matched_room, self.env.num_rooms
            )));
        }
        if self.batch_per_room == 0 || self.train_steps == 0 || self.walk_steps == 0 {
            return Err(Error::InvalidArgument("batch, step and walk sizes must be positive".into()));
        }
        if !self.agent_seeds.is_empty() && self.agent.env.noisy_tile.is_none() {
            return Err(Error::InvalidArgument("occupancy agents need a noisy tile".into()));
        }
        self.bonus.validate()
    }
}

/// Random-walk transitions split by the room of the successor state.
#[derive(Debug, Clone)]
pub struct ReplaySet {
    pub obs: Array2<f64>,
    pub actions: Vec<usize>,
    pub next_obs: Array2<f64>,
    pub next_rooms: Vec<usize>,
}

impl ReplaySet {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn rows_in_room(&self, room: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.next_rooms[i] == room).collect()
    }

    fn select(&self, rows: &[usize]) -> (Array2<f64>, Vec<usize>, Array2<f64>) {
        (
            self.obs.select(Axis(0), rows),
            rows.iter().map(|&i| self.actions[i]).collect(),
            self.next_obs.select(Axis(0), rows),
        )
    }
}

/// Uniform random walk of `steps` per env, recording every transition.
pub fn noisytv_replay(env: &CorridorConfig, num_envs: usize, steps: usize, seed: u64) -> Result<ReplaySet> {
    let mut vec = VecEnv::new(env.clone(), num_envs, seed)?;
    let mut rng = stream_rng(seed, stream::ACTION);
    let mut obs = vec.observe();
    let n = steps * num_envs;
    let d = vec.obs_dim();
    let mut out = ReplaySet {
        obs: Array2::zeros((n, d)),
        actions: Vec::with_capacity(n),
        next_obs: Array2::zeros((n, d)),
        next_rooms: Vec::with_capacity(n),
    };
    for t in 0..steps {
        let actions: Vec<usize> = (0..num_envs).map(|_| rng.random_range(0..env.num_actions)).collect();
        let step = vec.step(&actions)?;
        for e in 0..num_envs {
            let row = t * num_envs + e;
            out.obs.row_mut(row).assign(&obs.row(e));
            out.next_obs.row_mut(row).assign(&step.next_obs.row(e));
            out.next_rooms.push(step.next_state_indices[e] / env.room_width);
        }
        out.actions.extend_from_slice(&actions);
        obs = step.obs;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileRatios {
    pub seed: u64,
    pub rnd_noisy: f64,
    pub rnd_matched: f64,
    pub dynamics_noisy: f64,
    pub dynamics_matched: f64,
}

impl TileRatios {
    pub fn rnd_ratio(&self) -> f64 {
        self.rnd_noisy / self.rnd_matched
    }

    pub fn dynamics_ratio(&self) -> f64 {
        self.dynamics_noisy / self.dynamics_matched
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyResult {
    pub seed: u64,
    /// Fraction of agent steps spent in the noisy room over the second half of training.
    pub rnd: f64,
    pub dynamics: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyTvReport {
    pub ratios: Vec<TileRatios>,
    pub occupancy: Vec<OccupancyResult>,
}

fn mean(v: ndarray::Array1<f64>) -> f64 {
    v.mean().unwrap_or(f64::NAN)
}

fn tile_ratios(cfg: &NoisyTvConfig, seed: u64) -> Result<TileRatios> {
    let noisy = cfg.env.noisy_tile.expect("validated");
    let train = noisytv_replay(&cfg.env, cfg.num_envs, cfg.walk_steps, derive_seed(seed, 1))?;
    let held_out = noisytv_replay(&cfg.env, cfg.num_envs, cfg.walk_steps, derive_seed(seed, 2))?;

    let obs_dim = cfg.env.obs_dim();
    let mut rnd = RndBonus::new(obs_dim, &cfg.bonus, seed)?;
    let mut dynamics = DynamicsBonus::new(obs_dim, cfg.env.num_actions, &cfg.bonus, seed)?;
    rnd.update_obs_norm(train.next_obs.view())?;
    dynamics.update_obs_norm(train.next_obs.view())?;

    let pools = [train.rows_in_room(noisy), train.rows_in_room(cfg.matched_room)];
    if pools.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("random walk never reached one of the compared rooms".into()));
    }
    let mut rng = stream_rng(seed, stream::DATA);
    let mut rows = Vec::with_capacity(2 * cfg.batch_per_room);
    for _ in 0..cfg.train_steps {
        rows.clear();
        for pool in &pools {
            rows.extend((0..cfg.batch_per_room).map(|_| pool[rng.random_range(0..pool.len())]));
        }
        let (o, a, n) = train.select(&rows);
        rnd.train_predictor(n.view())?;
        dynamics.train(o.view(), &a, n.view())?;
    }

    let eval = |room: usize| -> Result<(f64, f64)> {
        let rows = held_out.rows_in_room(room);
        if rows.is_empty() {
            return Err(Error::InvalidArgument(format!("held-out walk never entered room {room}")));
        }
        let (o, a, n): (Array2<f64>, Vec<usize>, Array2<f64>) = held_out.select(&rows);
        let r = mean(rnd.intrinsic_reward(n.view())?);
        let d = mean(dynamics.dynamics_bonus(o.view(), &a, ArrayView2::from(&n))?);
        Ok((r, d))
    };
    let (rnd_noisy, dynamics_noisy) = eval(noisy)?;
    let (rnd_matched, dynamics_matched) = eval(cfg.matched_room)?;
    Ok(TileRatios {
        seed,
        rnd_noisy,
        rnd_matched,
        dynamics_noisy,
        dynamics_matched,
    })
}

fn late_occupancy(cfg: &ExperimentConfig, kind: BonusKind, seed: u64) -> Result<f64> {
    let run = ExperimentConfig {
        seed,
        bonus: kind,
        ..cfg.clone()
    };
    let mut trainer = Trainer::from_config(&run)?;
    let mut late = Vec::new();
    while !trainer.is_done() {
        let row = trainer.update()?;
        if row.update * 2 > run.num_updates {
            late.push(row.noisy_occupancy);
        }
    }
    Ok(late.iter().sum::<f64>() / late.len().max(1) as f64)
}

/// Tile ratios for every seed in `cfg.seeds`, plus agent occupancy for `cfg.agent_seeds`.
pub fn run_noisytv_contrast(cfg: &NoisyTvConfig) -> Result<NoisyTvReport> {
    cfg.validate()?;
    let ratios = cfg.seeds.iter().map(|&s| tile_ratios(cfg, s)).collect::<Result<Vec<_>>>()?;
    let occupancy = cfg
        .agent_seeds
        .iter()
        .map(|&seed| {
            Ok(OccupancyResult {
                seed,
                rnd: late_occupancy(&cfg.agent, BonusKind::Rnd, seed)?,
                dynamics: late_occupancy(&cfg.agent, BonusKind::Dynamics, seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoisyTvReport { ratios, occupancy })
}
