use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::config::{BonusKind, ExperimentConfig};
use crate::baselines::{AutoencoderBonus, CountTable, DynamicsBonus};
use crate::bonus::{ExplorationBonus, NoBonus, TransitionBatch};
use crate::error::Result;
use crate::rnd::RndBonus;

/// Any bonus selectable from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BonusModel {
    None(NoBonus),
    Rnd(RndBonus),
    Dynamics(DynamicsBonus),
    Autoencoder(AutoencoderBonus),
    Count(CountTable),
}

impl BonusModel {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let obs_dim = cfg.env.obs_dim();
        let seed = cfg.seed;
        Ok(match cfg.bonus {
            BonusKind::None => Self::None(NoBonus),
            BonusKind::Rnd => Self::Rnd(RndBonus::new(obs_dim, &cfg.rnd_config(), seed)?),
            BonusKind::Dynamics => Self::Dynamics(DynamicsBonus::new(
                obs_dim,
                cfg.env.num_actions,
                &cfg.rnd_config(),
                seed,
            )?),
            BonusKind::Autoencoder => Self::Autoencoder(AutoencoderBonus::new(obs_dim, &cfg.autoencoder_config(), seed)?),
            BonusKind::Count => Self::Count(CountTable::new(cfg.count_form)),
        })
    }

    pub fn kind(&self) -> BonusKind {
        match self {
            Self::None(_) => BonusKind::None,
            Self::Rnd(_) => BonusKind::Rnd,
            Self::Dynamics(_) => BonusKind::Dynamics,
            Self::Autoencoder(_) => BonusKind::Autoencoder,
            Self::Count(_) => BonusKind::Count,
        }
    }

    fn inner(&mut self) -> &mut dyn ExplorationBonus {
        match self {
            Self::None(b) => b,
            Self::Rnd(b) => b,
            Self::Dynamics(b) => b,
            Self::Autoencoder(b) => b,
            Self::Count(b) => b,
        }
    }
}

impl ExplorationBonus for BonusModel {
    fn observe(&mut self, next_obs: ArrayView2<f64>) -> Result<()> {
        self.inner().observe(next_obs)
    }

    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>> {
        self.inner().rewards(batch)
    }

    fn train_step(&mut self, batch: &TransitionBatch<'_>) -> Result<Option<f64>> {
        self.inner().train_step(batch)
    }
}
