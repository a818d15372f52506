//! Shared fixtures for the criterion benchmarks.

use ndarray::Array2;
use rnd_core::envs::{CorridorConfig, VecEnv};
use rnd_core::rnd::{RndBonus, RndConfig};

/// Deterministic pseudo-random batch in [-1, 1).
pub fn batch(rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        let h = (i as u64).wrapping_mul(0x9E37_79B9).wrapping_add(j as u64 * 0x85EB_CA6B);
        ((h % 2000) as f64 / 1000.0) - 1.0
    })
}

/// An RND bonus with its observation normalizer warmed up on the corridor.
pub fn warmed_rnd(env_config: &CorridorConfig, num_envs: usize) -> (RndBonus, VecEnv) {
    let mut env = VecEnv::new(env_config.clone(), num_envs, 0).expect("valid env");
    env.reset(0);
    let mut rnd = RndBonus::new(env_config.obs_dim(), &RndConfig::default(), 0).expect("valid rnd");
    let mut rng = rnd_core::rng::stream_rng(0, rnd_core::rng::stream::WARMUP);
    rnd.warmup_obs_norm(&mut env, 32, &mut rng, 0).expect("warm-up");
    (rnd, env)
}
