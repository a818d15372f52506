//! Corridor of rooms with a sparse goal, optional noisy-TV room and sticky actions.
//!
//! The agent walks a line of `num_rooms * room_width` cells. Action 0 moves
//! left, action 1 moves right, every other action leaves the agent in place.
//! Reaching the last cell of the last room pays 1 and ends the episode.
//!
//! Observations are `one_hot(room) ++ [cell / (room_width - 1)] ++ noise`,
//! where the `d_noise` trailing dims exist only when a noisy room is
//! configured and are resampled from U[0, 1) on every step spent in that room
//! (zeros elsewhere).

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng, StreamRng};

pub const ACTION_LEFT: usize = 0;
pub const ACTION_RIGHT: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorridorConfig {
    pub num_rooms: usize,
    pub room_width: usize,
    /// Room whose observation carries fresh uniform noise each step.
    pub noisy_tile: Option<usize>,
    pub d_noise: usize,
    pub sticky_prob: f64,
    /// Defaults to `8 * num_rooms * room_width` when unset.
    pub max_episode_steps: Option<usize>,
    pub num_actions: usize,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        Self {
            num_rooms: 10,
            room_width: 5,
            noisy_tile: None,
            d_noise: 8,
            sticky_prob: 0.25,
            max_episode_steps: None,
            num_actions: 4,
        }
    }
}

impl CorridorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_rooms == 0 || self.room_width == 0 {
            return Err(Error::InvalidArgument("corridor needs at least one room and one cell".into()));
        }
        if let Some(t) = self.noisy_tile {
            if t >= self.num_rooms {
                return Err(Error::InvalidArgument(format!(
                    "noisy tile {t} outside rooms 0..{}",
                    self.num_rooms
                )));
            }
        }
        if !(0.0..1.0).contains(&self.sticky_prob) {
            return Err(Error::InvalidArgument(format!("sticky_prob {} not in [0, 1)", self.sticky_prob)));
        }
        if self.num_actions < 2 {
            return Err(Error::InvalidArgument("need at least left and right actions".into()));
        }
        if self.max_episode_steps == Some(0) {
            return Err(Error::InvalidArgument("max_episode_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.num_rooms * self.room_width
    }

    pub fn step_budget(&self) -> usize {
        self.max_episode_steps.unwrap_or(8 * self.num_cells())
    }

    pub fn noise_dims(&self) -> usize {
        if self.noisy_tile.is_some() {
            self.d_noise
        } else {
            0
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.num_rooms + 1 + self.noise_dims()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorWorld {
    config: CorridorConfig,
    /// Linear cell index `room * room_width + cell`.
    position: usize,
    steps: usize,
    prev_action: Option<usize>,
    rng: StreamRng,
    noise: Vec<f64>,
}

/// One environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Array1<f64>,
    pub reward: f64,
    pub done: bool,
    pub reached_goal: bool,
    /// The action actually executed after the sticky rule.
    pub executed_action: usize,
}

impl CorridorWorld {
    pub fn new(config: CorridorConfig, rng: StreamRng) -> Result<Self> {
        config.validate()?;
        let noise = vec![0.0; config.noise_dims()];
        let mut env = Self {
            config,
            position: 0,
            steps: 0,
            prev_action: None,
            rng,
            noise,
        };
        env.refresh_noise();
        Ok(env)
    }

    pub fn config(&self) -> &CorridorConfig {
        &self.config
    }

    pub fn room(&self) -> usize {
        self.position / self.config.room_width
    }

    pub fn cell(&self) -> usize {
        self.position % self.config.room_width
    }

    /// Tabular index of (room, cell); noise dims do not participate.
    pub fn state_index(&self) -> usize {
        self.position
    }

    pub fn on_noisy_tile(&self) -> bool {
        self.config.noisy_tile == Some(self.room())
    }

    pub fn reset(&mut self) -> Array1<f64> {
        self.position = 0;
        self.steps = 0;
        self.prev_action = None;
        self.refresh_noise();
        self.observe()
    }

    fn refresh_noise(&mut self) {
        let noisy = self.on_noisy_tile();
        for v in self.noise.iter_mut() {
            *v = if noisy { self.rng.random::<f64>() } else { 0.0 };
        }
    }

    pub fn observe(&self) -> Array1<f64> {
        let c = &self.config;
        let mut obs = Array1::zeros(c.obs_dim());
        obs[self.room()] = 1.0;
        obs[c.num_rooms] = if c.room_width > 1 {
            self.cell() as f64 / (c.room_width - 1) as f64
        } else {
            0.0
        };
        for (i, &v) in self.noise.iter().enumerate() {
            obs[c.num_rooms + 1 + i] = v;
        }
        obs
    }

    pub fn step(&mut self, action: usize) -> Result<Transition> {
        if action >= self.config.num_actions {
            return Err(Error::InvalidArgument(format!(
                "action {action} outside 0..{}",
                self.config.num_actions
            )));
        }
        // Always draw, so the RNG stream does not depend on the action history.
        let sticky_draw: f64 = self.rng.random();
        let executed = match self.prev_action {
            Some(prev) if sticky_draw < self.config.sticky_prob => prev,
            _ => action,
        };
        self.prev_action = Some(executed);

        let last = self.config.num_cells() - 1;
        self.position = match executed {
            ACTION_LEFT => self.position.saturating_sub(1),
            ACTION_RIGHT => (self.position + 1).min(last),
            _ => self.position,
        };
        self.steps += 1;
        self.refresh_noise();

        let reached_goal = self.position == last;
        let done = reached_goal || self.steps >= self.config.step_budget();
        Ok(Transition {
            obs: self.observe(),
            reward: if reached_goal { 1.0 } else { 0.0 },
            done,
            reached_goal,
            executed_action: executed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeInfo {
    pub env: usize,
    pub episode_return: f64,
    pub length: usize,
    pub reached_goal: bool,
}

/// Result of stepping every environment once.
#[derive(Debug, Clone)]
pub struct VecStep {
    /// Observation to act on next (the reset observation for envs that finished).
    pub obs: Array2<f64>,
    /// True successor observation of each transition, before any auto-reset.
    pub next_obs: Array2<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Tabular index of each true successor state.
    pub next_state_indices: Vec<usize>,
    pub next_on_noisy_tile: Vec<bool>,
    pub executed_actions: Vec<usize>,
    pub episodes: Vec<EpisodeInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecEnv {
    config: CorridorConfig,
    envs: Vec<CorridorWorld>,
    episode_returns: Vec<f64>,
    episode_lengths: Vec<usize>,
}

impl VecEnv {
    pub fn new(config: CorridorConfig, num_envs: usize, seed: u64) -> Result<Self> {
        if num_envs == 0 {
            return Err(Error::InvalidArgument("need at least one environment".into()));
        }
        config.validate()?;
        let envs = (0..num_envs)
            .map(|e| CorridorWorld::new(config.clone(), stream_rng(seed, stream::ENV_BASE + e as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            envs,
            episode_returns: vec![0.0; num_envs],
            episode_lengths: vec![0; num_envs],
        })
    }

    pub fn num_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn config(&self) -> &CorridorConfig {
        &self.config
    }

    pub fn obs_dim(&self) -> usize {
        self.config.obs_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.config.num_actions
    }

    pub fn envs(&self) -> &[CorridorWorld] {
        &self.envs
    }

    pub fn episode_returns(&self) -> &[f64] {
        &self.episode_returns
    }

    /// Reseeds every env from `seed` and returns the start observations.
    pub fn reset(&mut self, seed: u64) -> Array2<f64> {
        for (e, env) in self.envs.iter_mut().enumerate() {
            env.rng = stream_rng(seed, stream::ENV_BASE + e as u64);
            env.reset();
        }
        self.episode_returns.iter_mut().for_each(|r| *r = 0.0);
        self.episode_lengths.iter_mut().for_each(|l| *l = 0);
        self.observe()
    }

    pub fn observe(&self) -> Array2<f64> {
        let mut obs = Array2::zeros((self.num_envs(), self.obs_dim()));
        for (mut row, env) in obs.rows_mut().into_iter().zip(&self.envs) {
            row.assign(&env.observe());
        }
        obs
    }

    pub fn state_indices(&self) -> Vec<usize> {
        self.envs.iter().map(CorridorWorld::state_index).collect()
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<VecStep> {
        if actions.len() != self.num_envs() {
            return Err(Error::InvalidArgument(format!(
                "got {} actions for {} environments",
                actions.len(),
                self.num_envs()
            )));
        }
        if let Some(&bad) = actions.iter().find(|&&a| a >= self.config.num_actions) {
            return Err(Error::InvalidArgument(format!(
                "action {bad} outside 0..{}",
                self.config.num_actions
            )));
        }
        let n = self.num_envs();
        let dim = self.obs_dim();
        let mut out = VecStep {
            obs: Array2::zeros((n, dim)),
            next_obs: Array2::zeros((n, dim)),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            next_state_indices: Vec::with_capacity(n),
            next_on_noisy_tile: Vec::with_capacity(n),
            executed_actions: Vec::with_capacity(n),
            episodes: Vec::new(),
        };
        for (e, (env, &action)) in self.envs.iter_mut().zip(actions).enumerate() {
            let tr = env.step(action)?;
            out.next_obs.row_mut(e).assign(&tr.obs);
            out.next_state_indices.push(env.state_index());
            out.next_on_noisy_tile.push(env.on_noisy_tile());
            self.episode_returns[e] += tr.reward;
            self.episode_lengths[e] += 1;
            if tr.done {
                out.episodes.push(EpisodeInfo {
                    env: e,
                    episode_return: self.episode_returns[e],
                    length: self.episode_lengths[e],
                    reached_goal: tr.reached_goal,
                });
                self.episode_returns[e] = 0.0;
                self.episode_lengths[e] = 0;
                out.obs.row_mut(e).assign(&env.reset());
            } else {
                out.obs.row_mut(e).assign(&tr.obs);
            }
            out.rewards.push(tr.reward);
            out.dones.push(tr.done);
            out.executed_actions.push(tr.executed_action);
        }
        Ok(out)
    }
}
