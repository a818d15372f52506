mod common;

use ndarray::{Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnd_core::stats::{ReturnNormalizer, RunningMeanStd, OBS_CLIP};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1e3..1e3f64, rows * cols).prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn welford_matches_two_pass(data in (2usize..60, 1usize..5).prop_flat_map(|(r, c)| matrix(r, c)), split in 1usize..8) {
        let mut rms = RunningMeanStd::new(data.ncols());
        for chunk in data.axis_chunks_iter(Axis(0), split) {
            rms.update(chunk).unwrap();
        }
        let (mean, var) = common::two_pass(data.view());
        for j in 0..data.ncols() {
            prop_assert!((rms.mean()[j] - mean[j]).abs() < 1e-9 * mean[j].abs().max(1.0));
            prop_assert!((rms.var()[j] - var[j]).abs() < 1e-9 * var[j].abs().max(1.0));
        }
    }

    #[test]
    fn normalized_observations_are_clipped(fit in matrix(8, 3), probe in prop::collection::vec(-1e12..1e12f64, 3)) {
        let mut rms = RunningMeanStd::new(3);
        rms.update(fit.view()).unwrap();
        let x = Array2::from_shape_vec((1, 3), probe).unwrap();
        let z = rms.normalize(x.view()).unwrap();
        prop_assert!(z.iter().all(|v| v.abs() <= OBS_CLIP));
    }
}

#[test]
fn constant_column_does_not_blow_up() {
    let mut rms = RunningMeanStd::new(2);
    rms.update(Array2::from_elem((10, 2), 3.0).view()).unwrap();
    let z = rms.normalize(Array2::from_elem((1, 2), 4.0).view()).unwrap();
    assert!(z.iter().all(|v| v.is_finite() && v.abs() <= OBS_CLIP));
}

fn normalized_return_std(scale: f64) -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(17);
    let envs = 4;
    let mut norm = ReturnNormalizer::new(envs, 0.99);
    let dones = Array2::zeros((100, envs));
    let mut per_env = vec![Vec::new(); envs];
    for _ in 0..100 {
        let block = Array2::from_shape_fn((100, envs), |_| scale * r.random::<f64>());
        let out = norm.normalize_reward(block.view(), dones.view()).unwrap();
        for (stream, col) in per_env.iter_mut().zip(out.rewards.columns()) {
            stream.extend(col.iter());
        }
    }
    let tail: Vec<f64> = per_env
        .iter()
        .flat_map(|s| common::forward_accumulate(&s[5000..], 0.99).into_iter().skip(500))
        .collect();
    common::population_std(&tail)
}

#[test]
fn reward_normalizer_is_scale_invariant() {
    let base = normalized_return_std(1.0);
    for scale in [1e-3, 1e3] {
        let other = normalized_return_std(scale);
        assert!((other / base - 1.0).abs() < 0.05, "scale {scale}: {other} vs {base}");
    }
}

#[test]
fn return_accumulator_follows_discounted_sum() {
    let mut norm = ReturnNormalizer::new(1, 0.5);
    let rewards = [1.0, 2.0, 4.0];
    let block = Array2::from_shape_vec((3, 1), rewards.to_vec()).unwrap();
    norm.update(block.view(), Array2::zeros((3, 1)).view()).unwrap();
    let want = common::forward_accumulate(&rewards, 0.5);
    assert_eq!(norm.accumulators()[0], *want.last().unwrap());
    let mean = want.iter().sum::<f64>() / 3.0;
    assert!((norm.rms().mean()[0] - mean).abs() < 1e-12);
    assert!((norm.return_std() - common::population_std(&want)).abs() < 1e-12);
}

#[test]
fn reset_on_done_restarts_the_sum() {
    let mut norm = ReturnNormalizer::new(1, 0.9).with_reset_on_done(true);
    let r = Array2::from_elem((2, 1), 1.0);
    let d = Array2::from_shape_vec((2, 1), vec![1.0, 0.0]).unwrap();
    norm.update(r.view(), d.view()).unwrap();
    assert_eq!(norm.accumulators()[0], 1.0);
}

#[test]
fn zero_variance_passes_rewards_through() {
    let norm = ReturnNormalizer::new(2, 0.99);
    let r = Array2::from_elem((3, 2), 0.7);
    let out = norm.normalize(r.view());
    assert!(out.warmup);
    assert_eq!(out.rewards, r);
}
