use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discounting and episode semantics of one reward stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Episodic streams stop bootstrapping at done flags; non-episodic ones ignore dones.
    pub episodic: bool,
    pub reward_coef: f64,
}

impl StreamSpec {
    pub fn extrinsic() -> Self {
        Self {
            gamma: 0.999,
            gae_lambda: 0.95,
            episodic: true,
            reward_coef: 2.0,
        }
    }

    pub fn intrinsic() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            episodic: false,
            reward_coef: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("discount {} not in [0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::InvalidArgument(format!("gae lambda {} not in [0, 1]", self.gae_lambda)));
        }
        if self.reward_coef.is_nan() || self.reward_coef < 0.0 {
            return Err(Error::InvalidArgument(format!("reward coefficient {} is negative", self.reward_coef)));
        }
        Ok(())
    }
}

/// Generalized advantage estimation over a `(K, E)` block.
///
/// `dones[t, e] = 1` marks that the transition at step `t` ended an episode;
/// `values[t + 1]` then belongs to the reset state, and episodic streams mask it.
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn compute_gae(
    rewards: ArrayView2<f64>,
    values: ArrayView2<f64>,
    bootstrap: ArrayView1<f64>,
    dones: ArrayView2<f64>,
    spec: &StreamSpec,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (steps, envs) = rewards.dim();
    if values.dim() != rewards.dim() || dones.dim() != rewards.dim() || bootstrap.len() != envs {
        return Err(Error::Shape(format!(
            "gae inputs disagree: rewards {:?}, values {:?}, dones {:?}, bootstrap {}",
            rewards.dim(),
            values.dim(),
            dones.dim(),
            bootstrap.len()
        )));
    }
    let mut adv = Array2::zeros((steps, envs));
    for e in 0..envs {
        let mut next_adv = 0.0;
        let mut next_value = bootstrap[e];
        for t in (0..steps).rev() {
            let mask = if spec.episodic { 1.0 - dones[[t, e]] } else { 1.0 };
            let delta = rewards[[t, e]] + spec.gamma * next_value * mask - values[[t, e]];
            next_adv = delta + spec.gamma * spec.gae_lambda * mask * next_adv;
            adv[[t, e]] = next_adv;
            next_value = values[[t, e]];
        }
    }
    let returns = &adv + &values;
    Ok((adv, returns))
}

/// `c_e * adv_e + c_i * adv_i`.
pub fn combine_advantages(
    adv_ext: ArrayView2<f64>,
    adv_int: ArrayView2<f64>,
    coef_ext: f64,
    coef_int: f64,
) -> Result<Array2<f64>> {
    if !(coef_ext >= 0.0 && coef_int >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "advantage coefficients must be non-negative, got {coef_ext} and {coef_int}"
        )));
    }
    if adv_ext.dim() != adv_int.dim() {
        return Err(Error::Shape(format!("{:?} vs {:?}", adv_ext.dim(), adv_int.dim())));
    }
    Ok(&adv_ext * coef_ext + &adv_int * coef_int)
}
