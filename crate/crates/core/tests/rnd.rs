use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rnd_core::envs::{CorridorConfig, VecEnv};
use rnd_core::numnet::{Activation, DenseNet, OutputActivation};
use rnd_core::rnd::{RndBonus, RndConfig};
use rnd_core::rng::{stream, stream_rng};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| r.sample(StandardNormal))
}

/// Scalar-loop forward pass, written without ndarray products.
fn naive_forward(net: &DenseNet, x: &[f64]) -> Vec<f64> {
    let spec = net.spec();
    let last = net.num_layers() - 1;
    let mut h = x.to_vec();
    for (l, (w, b)) in net.weights().iter().zip(net.biases()).enumerate() {
        let mut out = vec![0.0; w.nrows()];
        for (i, o) in out.iter_mut().enumerate() {
            let mut z = b[i];
            for (j, hj) in h.iter().enumerate() {
                z += w[[i, j]] * hj;
            }
            *o = if l < last {
                match spec.hidden_activation {
                    Activation::Relu => z.max(0.0),
                    Activation::LeakyRelu => {
                        if z > 0.0 {
                            z
                        } else {
                            0.01 * z
                        }
                    }
                }
            } else if spec.output_activation == OutputActivation::Sigmoid {
                1.0 / (1.0 + (-z).exp())
            } else {
                z
            };
        }
        h = out;
    }
    h
}

#[test]
fn bonus_matches_straight_line_recomputation() {
    let cfg = RndConfig {
        hidden: vec![12, 12],
        embedding_dim: 6,
        ..RndConfig::default()
    };
    let mut bonus = RndBonus::new(5, &cfg, 31).unwrap();
    let fit = gaussian(200, 5, 1).mapv(|v| 3.0 * v + 1.0);
    bonus.update_obs_norm(fit.view()).unwrap();
    let probe = gaussian(4, 5, 2).mapv(|v| 4.0 * v);
    let got = bonus.intrinsic_reward(probe.view()).unwrap();

    // Whitening recomputed from the raw fit data.
    let n = fit.nrows() as f64;
    for (row, &g) in probe.rows().into_iter().zip(got.iter()) {
        let z: Vec<f64> = (0..5)
            .map(|j| {
                let col = fit.column(j);
                let mean = col.sum() / n;
                let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                ((row[j] - mean) / (std + 1e-8)).clamp(-5.0, 5.0)
            })
            .collect();
        let f = naive_forward(bonus.target(), &z);
        let p = naive_forward(bonus.predictor(), &z);
        let want = f.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / f.len() as f64;
        assert!((g - want).abs() <= 1e-12 * want.max(1.0), "{g} vs {want}");
    }
}

#[test]
fn fixed_batch_loss_falls_below_a_tenth() {
    let mut bonus = RndBonus::new(8, &RndConfig::default(), 3).unwrap();
    let obs = gaussian(32, 8, 4);
    bonus.update_obs_norm(obs.view()).unwrap();
    let initial = bonus.distillation_loss(obs.view()).unwrap();
    let mut reached = None;
    for step in 0..2000 {
        bonus.train_predictor(obs.view()).unwrap().expect("keep_prob 1 keeps every row");
        if bonus.distillation_loss(obs.view()).unwrap() < 0.1 * initial {
            reached = Some(step + 1);
            break;
        }
    }
    assert!(reached.is_some(), "loss never fell below 10% of {initial}");
}

#[test]
fn trained_set_scores_below_fresh_observations() {
    let cfg = RndConfig {
        learning_rate: 1e-3,
        ..RndConfig::default()
    };
    let mut wins = 0;
    for seed in 0..20u64 {
        let mut bonus = RndBonus::new(8, &cfg, seed).unwrap();
        bonus.update_obs_norm(gaussian(2000, 8, 1000 + seed).view()).unwrap();
        let train = gaussian(64, 8, 2000 + seed);
        let fresh = gaussian(64, 8, 3000 + seed);
        for _ in 0..300 {
            bonus.train_predictor(train.view()).unwrap();
        }
        let seen = bonus.intrinsic_reward(train.view()).unwrap().mean().unwrap();
        let novel = bonus.intrinsic_reward(fresh.view()).unwrap().mean().unwrap();
        wins += (seen < novel) as usize;
    }
    assert!(wins >= 19, "trained set scored lower in only {wins}/20 seeds");
}

#[test]
fn warmup_is_deterministic() {
    let run = || {
        let mut env = VecEnv::new(CorridorConfig::default(), 4, 8).unwrap();
        let mut bonus = RndBonus::new(env.obs_dim(), &RndConfig::default(), 8).unwrap();
        bonus
            .warmup_obs_norm(&mut env, 25, &mut stream_rng(8, stream::WARMUP), 99)
            .unwrap();
        (bonus, env)
    };
    let (a, env_a) = run();
    let (b, env_b) = run();
    assert_eq!(a.obs_rms(), b.obs_rms());
    assert_eq!(a.obs_rms().count(), 100.0);
    assert_eq!(env_a, env_b);
}

#[test]
fn constant_observation_env_whitens_to_zero() {
    let cfg = CorridorConfig {
        num_rooms: 1,
        room_width: 1,
        ..CorridorConfig::default()
    };
    let mut env = VecEnv::new(cfg, 2, 0).unwrap();
    let mut bonus = RndBonus::new(env.obs_dim(), &RndConfig::default(), 0).unwrap();
    bonus
        .warmup_obs_norm(&mut env, 10, &mut stream_rng(0, stream::WARMUP), 1)
        .unwrap();
    assert!(bonus.obs_rms().var().iter().all(|&v| v == 0.0));
    let obs = env.observe();
    let r = bonus.intrinsic_reward(obs.view()).unwrap();
    // Whitened input is all zeros, so every row scores the nets' disagreement at the origin.
    let zero = Array2::zeros((1, obs.ncols()));
    let f = bonus.target().predict(zero.view()).unwrap();
    let p = bonus.predictor().predict(zero.view()).unwrap();
    let want = (&f - &p).mapv(|d| d * d).mean().unwrap();
    assert_eq!(r, Array1::from_elem(2, want));
}
