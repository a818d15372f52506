//! Random network distillation (RND) exploration toolkit.
//!
//! * [`numnet`]: dense networks, backprop and Adam.
//! * [`stats`]: running mean/std for observation whitening and return scaling.
//! * [`rnd`]: the distillation bonus.
//! * [`agent`]: dual-value-head PPO and per-stream GAE.
//! * [`envs`]: vectorized corridor world with sticky actions and a noisy-TV room.
//! * [`baselines`]: dynamics, autoencoder and count bonuses.
//! * [`data`]: IDX parsing and the novelty-detection experiment.
//! * [`experiment`]: configuration, the training loop, logs and snapshots.

pub mod agent;
pub mod baselines;
pub mod bonus;
pub mod data;
pub mod envs;
mod error;
pub mod experiment;
pub mod numnet;
pub mod rnd;
pub mod rng;
pub mod stats;

pub use bonus::{ExplorationBonus, NoBonus, TransitionBatch};
pub use error::{Error, ErrorCategory, Result};
