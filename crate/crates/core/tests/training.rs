use ndarray::Array1;
use rnd_core::experiment::{BonusKind, ExperimentConfig, LogRow, Phase, Trainer};
use rnd_core::{ExplorationBonus, NoBonus, Result, TransitionBatch};

fn small(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        seed,
        num_envs: 4,
        rollout_len: 32,
        num_updates: 4,
        warmup_steps: 8,
        policy_hidden: vec![16],
        ..ExperimentConfig::default()
    };
    cfg.env.num_rooms = 3;
    cfg.env.room_width = 4;
    cfg.rnd.hidden = vec![16];
    cfg.rnd.embedding_dim = 8;
    cfg
}

fn rows<B: ExplorationBonus>(mut t: Trainer<B>) -> Vec<LogRow> {
    let mut out = Vec::new();
    while !t.is_done() {
        out.push(t.update().unwrap());
    }
    out
}

/// Zero bonus defined outside the library, to check the loop has no bonus-specific branches.
struct ZeroStub;

impl ExplorationBonus for ZeroStub {
    fn observe(&mut self, _: ndarray::ArrayView2<f64>) -> Result<()> {
        Ok(())
    }

    fn rewards(&mut self, batch: &TransitionBatch<'_>) -> Result<Array1<f64>> {
        Ok(Array1::zeros(batch.len()))
    }

    fn train_step(&mut self, _: &TransitionBatch<'_>) -> Result<Option<f64>> {
        Ok(None)
    }
}

#[test]
fn zero_bonus_stub_matches_no_bonus_run() {
    let cfg = ExperimentConfig {
        bonus: BonusKind::None,
        ..small(3)
    };
    let builtin = rows(Trainer::from_config(&cfg).unwrap());
    let plain = rows(Trainer::new(&cfg, NoBonus).unwrap());
    let stub = rows(Trainer::new(&cfg, ZeroStub).unwrap());
    assert_eq!(builtin, plain);
    assert_eq!(builtin, stub);
    assert!(builtin.iter().all(|r| r.mean_int_reward == 0.0 && r.bonus_steps == 0));
}

#[test]
fn phases_run_in_order() {
    let mut t = Trainer::from_config(&small(1)).unwrap();
    t.update().unwrap();
    t.update().unwrap();
    let one = [
        Phase::Collect,
        Phase::RewardNormUpdate,
        Phase::NormalizeIntrinsic,
        Phase::Advantages,
        Phase::ObsNormUpdate,
        Phase::Optimize,
    ];
    let mut want = vec![Phase::Warmup];
    want.extend(one);
    want.extend(one);
    assert_eq!(t.trace(), &want[..]);
    assert!(t.warmup().is_err());
}

#[test]
fn counters_track_each_stage() {
    let cfg = small(2);
    let mut t = Trainer::from_config(&cfg).unwrap();
    let mut last = None;
    for _ in 0..3 {
        last = Some(t.update().unwrap());
    }
    let row = last.unwrap();
    let per_epoch = cfg.opt_epochs * cfg.minibatches;
    assert_eq!(row.frames, 3 * cfg.num_envs * cfg.rollout_len);
    assert_eq!(row.reward_norm_updates, 3);
    assert_eq!(row.obs_norm_updates, 1 + 3);
    assert_eq!(row.policy_steps, 3 * per_epoch);
    assert_eq!(row.bonus_steps, 3 * per_epoch);
    assert_eq!(t.return_normalizer().rms().count(), (3 * cfg.num_envs * cfg.rollout_len) as f64);
}

#[test]
fn frozen_observation_statistics_stop_after_warmup() {
    let cfg = ExperimentConfig {
        freeze_obs_norm: true,
        ..small(2)
    };
    let mut t = Trainer::from_config(&cfg).unwrap();
    t.update().unwrap();
    let row = t.update().unwrap();
    assert_eq!(row.obs_norm_updates, 1);
}

#[test]
fn every_bonus_kind_trains_through_the_same_loop() {
    for kind in [BonusKind::Rnd, BonusKind::Dynamics, BonusKind::Autoencoder, BonusKind::Count, BonusKind::None] {
        let cfg = ExperimentConfig { bonus: kind, ..small(4) };
        let out = rows(Trainer::from_config(&cfg).unwrap());
        assert_eq!(out.len(), cfg.num_updates, "{kind}");
        assert!(out.iter().all(|r| r.policy_loss.is_finite() && r.entropy > 0.0), "{kind}");
        if kind != BonusKind::None {
            assert!(out.iter().all(|r| r.mean_int_reward > 0.0), "{kind}");
        }
    }
}

#[test]
fn single_value_head_runs() {
    let cfg = ExperimentConfig {
        dual_value_heads: false,
        ..small(5)
    };
    let out = rows(Trainer::from_config(&cfg).unwrap());
    assert!(out.iter().all(|r| r.value_loss_int == 0.0 && r.value_loss_ext.is_finite()));
}

#[test]
fn plain_ppo_solves_a_short_corridor() {
    let mut cfg = ExperimentConfig {
        seed: 0,
        num_envs: 8,
        rollout_len: 64,
        num_updates: 60,
        learning_rate: 1e-3,
        bonus: BonusKind::None,
        ..ExperimentConfig::default()
    };
    cfg.env.num_rooms = 1;
    cfg.env.room_width = 5;
    cfg.env.sticky_prob = 0.0;
    let out = rows(Trainer::from_config(&cfg).unwrap());
    let tail = &out[out.len() - 5..];
    let steps = (cfg.num_envs * cfg.rollout_len) as f64;
    // The goal is 4 steps away and pays 1; near-optimal play ends an episode every ~4 steps.
    for r in tail {
        assert_eq!(r.mean_episode_return, 1.0);
        assert!(r.episodes as f64 >= 0.8 * steps / 4.0, "{} episodes", r.episodes);
    }
}
