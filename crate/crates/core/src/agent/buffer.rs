use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// One rollout of `K` steps across `E` envs, laid out `[step, env, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub obs: Array3<f64>,
    /// True successor observations (before auto-reset).
    pub next_obs: Array3<f64>,
    pub actions: Array2<usize>,
    pub log_probs: Array2<f64>,
    pub ext_rewards: Array2<f64>,
    /// Raw intrinsic rewards as produced by the bonus.
    pub int_rewards: Array2<f64>,
    /// 1.0 where the transition ended an episode.
    pub dones: Array2<f64>,
    pub value_ext: Array2<f64>,
    pub value_int: Array2<f64>,
    pub next_state_indices: Array2<usize>,
    pub bootstrap_ext: Array1<f64>,
    pub bootstrap_int: Array1<f64>,
    filled: usize,
}

/// Everything recorded for one vectorized step.
pub struct StepRecord<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub next_obs: ArrayView2<'a, f64>,
    pub actions: &'a [usize],
    pub log_probs: ArrayView1<'a, f64>,
    pub ext_rewards: &'a [f64],
    pub int_rewards: ArrayView1<'a, f64>,
    pub dones: &'a [bool],
    pub value_ext: ArrayView1<'a, f64>,
    pub value_int: ArrayView1<'a, f64>,
    pub next_state_indices: &'a [usize],
}

impl RolloutBuffer {
    pub fn new(steps: usize, envs: usize, obs_dim: usize) -> Self {
        Self {
            obs: Array3::zeros((steps, envs, obs_dim)),
            next_obs: Array3::zeros((steps, envs, obs_dim)),
            actions: Array2::zeros((steps, envs)),
            log_probs: Array2::zeros((steps, envs)),
            ext_rewards: Array2::zeros((steps, envs)),
            int_rewards: Array2::zeros((steps, envs)),
            dones: Array2::zeros((steps, envs)),
            value_ext: Array2::zeros((steps, envs)),
            value_int: Array2::zeros((steps, envs)),
            next_state_indices: Array2::zeros((steps, envs)),
            bootstrap_ext: Array1::zeros(envs),
            bootstrap_int: Array1::zeros(envs),
            filled: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.actions.nrows()
    }

    pub fn envs(&self) -> usize {
        self.actions.ncols()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs.dim().2
    }

    pub fn is_full(&self) -> bool {
        self.filled == self.steps()
    }

    pub fn clear(&mut self) {
        self.filled = 0;
    }

    pub fn push(&mut self, rec: StepRecord<'_>) -> Result<()> {
        if self.is_full() {
            return Err(Error::InvalidState("rollout buffer is already full".into()));
        }
        let e = self.envs();
        if rec.obs.dim() != (e, self.obs_dim()) || rec.next_obs.dim() != (e, self.obs_dim()) || rec.actions.len() != e {
            return Err(Error::Shape("step record does not match buffer layout".into()));
        }
        let t = self.filled;
        self.obs.slice_mut(s![t, .., ..]).assign(&rec.obs);
        self.next_obs.slice_mut(s![t, .., ..]).assign(&rec.next_obs);
        for i in 0..e {
            self.actions[[t, i]] = rec.actions[i];
            self.ext_rewards[[t, i]] = rec.ext_rewards[i];
            self.dones[[t, i]] = if rec.dones[i] { 1.0 } else { 0.0 };
            self.next_state_indices[[t, i]] = rec.next_state_indices[i];
        }
        self.log_probs.row_mut(t).assign(&rec.log_probs);
        self.int_rewards.row_mut(t).assign(&rec.int_rewards);
        self.value_ext.row_mut(t).assign(&rec.value_ext);
        self.value_int.row_mut(t).assign(&rec.value_int);
        self.filled += 1;
        Ok(())
    }

    /// Observations flattened to `(K * E, D)` in `(step, env)` order.
    pub fn flat_obs(&self) -> Array2<f64> {
        let (k, e, d) = self.obs.dim();
        self.obs.to_shape((k * e, d)).expect("contiguous").to_owned()
    }

    pub fn flat_next_obs(&self) -> Array2<f64> {
        let (k, e, d) = self.next_obs.dim();
        self.next_obs.to_shape((k * e, d)).expect("contiguous").to_owned()
    }
}

pub(crate) fn flatten<T: Clone>(a: &Array2<T>) -> Vec<T> {
    a.iter().cloned().collect()
}
