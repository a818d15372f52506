use std::collections::BTreeMap;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::bonus::{ExplorationBonus, TransitionBatch};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CountBonusForm {
    /// 1 / n
    Inverse,
    /// 1 / sqrt(n)
    #[default]
    InverseSqrt,
}

/// Tabular visitation counts n(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    form: CountBonusForm,
    counts: BTreeMap<usize, u64>,
}

impl CountTable {
    pub fn new(form: CountBonusForm) -> Self {
        Self {
            form,
            counts: BTreeMap::new(),
        }
    }

    pub fn record_visit(&mut self, state: usize) {
        *self.counts.entry(state).or_insert(0) += 1;
    }

    pub fn count(&self, state: usize) -> u64 {
        self.counts.get(&state).copied().unwrap_or(0)
    }

    pub fn states_visited(&self) -> usize {
        self.counts.len()
    }

    /// Bonus at the current count. A never-visited state is treated as a
    /// first visit (bonus 1) without incrementing.
    pub fn count_bonus(&self, state: usize) -> f64 {
        let n = self.count(state).max(1) as f64;
        match self.form {
            CountBonusForm::Inverse => 1.0 / n,
            CountBonusForm::InverseSqrt => 1.0 / n.sqrt(),
        }
    }

    /// Records the visit, then returns the bonus for the new count.
    pub fn visit(&mut self, state: usize) -> f64 {
        self.record_visit(state);
        self.count_bonus(state)
    }
}

impl ExplorationBonus for CountTable {
    fn observe(&mut self, _next_obs: ArrayView2<f64>) -> Result<()> {
        Ok(())
    }

    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>> {
        if batch.next_state_indices.len() != batch.len() {
            return Err(Error::Shape("count bonus needs one state index per transition".into()));
        }
        Ok(batch.next_state_indices.iter().map(|&s| self.visit(s)).collect())
    }

    fn train_step(&mut self, _batch: &TransitionBatch<'_>) -> Result<Option<f64>> {
        Ok(None)
    }
}
