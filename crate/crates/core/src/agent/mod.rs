//! PPO with separate extrinsic and intrinsic value heads.

mod buffer;
mod gae;
mod policy;
mod ppo;

pub use buffer::{RolloutBuffer, StepRecord};
pub(crate) use buffer::flatten;
pub use gae::{combine_advantages, compute_gae, StreamSpec};
pub use policy::{log_softmax, softmax_entropy, ActOutput, PolicyNet, PolicyOutput};
pub use ppo::{minibatch_loss, ppo_update, MinibatchLoss, PpoBatch, PpoParams, PpoStats};
