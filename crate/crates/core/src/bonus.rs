//! Common interface for exploration bonuses so the training loop never
//! branches on which bonus is active.

use ndarray::{Array1, ArrayView2};

use crate::error::Result;

/// A batch of transitions `(s_t, a_t, s_{t+1})` in raw observation space.
#[derive(Debug, Clone, Copy)]
pub struct TransitionBatch<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub actions: &'a [usize],
    pub next_obs: ArrayView2<'a, f64>,
    /// Tabular index of each successor state (only the count bonus reads it).
    pub next_state_indices: &'a [usize],
}

impl TransitionBatch<'_> {
    pub fn len(&self) -> usize {
        self.next_obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub trait ExplorationBonus {
    /// Feeds successor observations into the bonus' own observation normalizer.
    fn observe(&mut self, next_obs: ArrayView2<f64>) -> Result<()>;

    /// Raw (unnormalized) intrinsic reward per transition.
    ///
    /// Takes `&mut self` because counting bonuses record the visit here.
    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>>;

    /// One optimizer step on the batch. Returns the pre-step loss, or `None`
    /// when the bonus has nothing to learn or dropout kept no samples.
    fn train_step(&mut self, batch: &TransitionBatch<'_>) -> Result<Option<f64>>;
}

/// The no-bonus control: intrinsic reward is identically zero.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoBonus;

impl ExplorationBonus for NoBonus {
    fn observe(&mut self, _next_obs: ArrayView2<f64>) -> Result<()> {
        Ok(())
    }

    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>> {
        Ok(Array1::zeros(batch.len()))
    }

    fn train_step(&mut self, _batch: &TransitionBatch<'_>) -> Result<Option<f64>> {
        Ok(None)
    }
}
