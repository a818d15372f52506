//! Comparison bonuses run under the same harness as RND.

mod autoencoder;
mod count;
mod dynamics;

pub use autoencoder::{AutoencoderBonus, AutoencoderConfig};
pub use count::{CountBonusForm, CountTable};
pub use dynamics::DynamicsBonus;
