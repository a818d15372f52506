use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{log_softmax, PolicyNet};
use crate::error::{Error, Result};
use crate::numnet::{AdamState, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpoParams {
    pub epochs: usize,
    pub minibatches: usize,
    /// Ratio clip epsilon: rho is clipped to [1 - eps, 1 + eps].
    pub clip_eps: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub normalize_advantages: bool,
    /// When false only the extrinsic head is fit (to the combined return).
    pub dual_value_heads: bool,
}

impl Default for PpoParams {
    fn default() -> Self {
        Self {
            epochs: 4,
            minibatches: 4,
            clip_eps: 0.1,
            entropy_coef: 0.001,
            value_coef: 0.5,
            normalize_advantages: true,
            dual_value_heads: true,
        }
    }
}

/// Flattened training batch for one PPO update.
#[derive(Debug, Clone)]
pub struct PpoBatch {
    pub obs: Array2<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Array1<f64>,
    pub advantages: Array1<f64>,
    pub returns_ext: Array1<f64>,
    pub returns_int: Array1<f64>,
}

impl PpoBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        if self.obs.nrows() != n
            || self.old_log_probs.len() != n
            || self.advantages.len() != n
            || self.returns_ext.len() != n
            || self.returns_int.len() != n
        {
            return Err(Error::Shape("ppo batch fields disagree on length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss_ext: f64,
    pub value_loss_int: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Mean loss reported by the per-minibatch hook (e.g. the predictor).
    pub aux_loss: f64,
    pub optimizer_steps: usize,
}

/// Loss terms of one minibatch, all means over the minibatch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MinibatchLoss {
    pub total: f64,
    /// mean(min(rho * A, clip(rho) * A)); the policy loss is its negation.
    pub surrogate: f64,
    pub value_ext: f64,
    pub value_int: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Full PPO loss and its exact parameter gradients for one minibatch.
#[allow(clippy::too_many_arguments)]
pub fn minibatch_loss(
    policy: &PolicyNet,
    obs: ArrayView2<f64>,
    actions: &[usize],
    old_log_probs: ArrayView1<f64>,
    advantages: ArrayView1<f64>,
    returns_ext: ArrayView1<f64>,
    returns_int: ArrayView1<f64>,
    params: &PpoParams,
) -> Result<(MinibatchLoss, Gradients)> {
    let (out, cache) = policy.forward(obs)?;
    let b = actions.len();
    let a_dim = policy.num_actions();
    let inv_b = 1.0 / b as f64;
    let mut d_out = Array2::zeros((b, a_dim + 2));
    let mut loss = MinibatchLoss::default();

    for i in 0..b {
        let logp = log_softmax(out.logits.row(i));
        let probs = logp.mapv(f64::exp);
        let a = actions[i];
        let log_ratio = logp[a] - old_log_probs[i];
        let ratio = log_ratio.exp();
        let adv = advantages[i];
        let clipped = ratio.clamp(1.0 - params.clip_eps, 1.0 + params.clip_eps);
        let unclipped_term = ratio * adv;
        let clipped_term = clipped * adv;
        let surr = unclipped_term.min(clipped_term);
        loss.surrogate += surr * inv_b;
        if (ratio - 1.0).abs() > params.clip_eps {
            loss.clip_fraction += inv_b;
        }
        loss.approx_kl += ((ratio - 1.0) - log_ratio) * inv_b;

        let entropy: f64 = -probs.iter().zip(logp.iter()).map(|(p, lp)| if *p > 0.0 { p * lp } else { 0.0 }).sum::<f64>();
        loss.entropy += entropy * inv_b;

        // d(-surr)/d logp_a: only the unclipped branch carries gradient.
        let d_logp = if unclipped_term <= clipped_term { -unclipped_term * inv_b } else { 0.0 };
        for j in 0..a_dim {
            let indicator = if j == a { 1.0 } else { 0.0 };
            let lp = if probs[j] > 0.0 { logp[j] } else { 0.0 };
            let d_entropy = -probs[j] * (lp + entropy);
            d_out[[i, j]] = d_logp * (indicator - probs[j]) - params.entropy_coef * inv_b * d_entropy;
        }

        if params.dual_value_heads {
            let err_e = out.value_ext[i] - returns_ext[i];
            let err_i = out.value_int[i] - returns_int[i];
            loss.value_ext += err_e * err_e * inv_b;
            loss.value_int += err_i * err_i * inv_b;
            d_out[[i, a_dim]] = params.value_coef * 2.0 * err_e * inv_b;
            d_out[[i, a_dim + 1]] = params.value_coef * 2.0 * err_i * inv_b;
        } else {
            let err = out.value_ext[i] - returns_ext[i];
            loss.value_ext += err * err * inv_b;
            d_out[[i, a_dim]] = params.value_coef * 2.0 * err * inv_b;
        }
    }
    loss.total = -loss.surrogate + params.value_coef * (loss.value_ext + loss.value_int) - params.entropy_coef * loss.entropy;
    let (grads, _) = policy.net().backward(&cache, d_out.view())?;
    Ok((loss, grads))
}

fn describe(batch: &PpoBatch, advantages: &Array1<f64>) -> String {
    let stat = |a: &Array1<f64>| {
        let mean = a.mean().unwrap_or(f64::NAN);
        let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        format!("mean={mean:.4e} min={min:.4e} max={max:.4e}")
    };
    format!(
        "batch n={} | advantages {} | returns_ext {} | returns_int {} | old_log_probs {}",
        batch.len(),
        stat(advantages),
        stat(&batch.returns_ext),
        stat(&batch.returns_int),
        stat(&batch.old_log_probs)
    )
}

/// Runs `params.epochs` passes of shuffled minibatch PPO updates.
///
/// After each policy step `on_minibatch` receives the minibatch row indices,
/// so the caller can train its predictor on the same samples.
pub fn ppo_update<R, F>(
    policy: &mut PolicyNet,
    optimizer: &mut AdamState,
    batch: &PpoBatch,
    params: &PpoParams,
    rng: &mut R,
    mut on_minibatch: F,
) -> Result<PpoStats>
where
    R: Rng + ?Sized,
    F: FnMut(&[usize]) -> Result<Option<f64>>,
{
    batch.check()?;
    if batch.is_empty() || params.minibatches == 0 || params.minibatches > batch.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} samples into {} minibatches",
            batch.len(),
            params.minibatches
        )));
    }
    let mut advantages = batch.advantages.clone();
    if params.normalize_advantages {
        let mean = advantages.mean().unwrap();
        let std = advantages.std(0.0);
        advantages.mapv_inplace(|a| (a - mean) / (std + 1e-8));
    }

    let n = batch.len();
    let mb_size = n / params.minibatches;
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = PpoStats::default();
    let mut aux_sum = 0.0;
    let mut aux_count = 0usize;

    for _ in 0..params.epochs {
        order.shuffle(rng);
        for m in 0..params.minibatches {
            let end = if m + 1 == params.minibatches { n } else { (m + 1) * mb_size };
            let idx = &order[m * mb_size..end];
            let obs = batch.obs.select(Axis(0), idx);
            let actions: Vec<usize> = idx.iter().map(|&i| batch.actions[i]).collect();
            let pick = |a: &Array1<f64>| a.select(Axis(0), idx);
            let (loss, grads) = minibatch_loss(
                policy,
                obs.view(),
                &actions,
                pick(&batch.old_log_probs).view(),
                pick(&advantages).view(),
                pick(&batch.returns_ext).view(),
                pick(&batch.returns_int).view(),
                params,
            )?;
            if !loss.total.is_finite() || !grads.all_finite() {
                return Err(Error::NonFinite(format!(
                    "ppo loss {:?}; {}",
                    loss,
                    describe(batch, &advantages)
                )));
            }
            optimizer.step(policy.net_mut(), &grads)?;
            stats.policy_loss -= loss.surrogate;
            stats.value_loss_ext += loss.value_ext;
            stats.value_loss_int += loss.value_int;
            stats.entropy += loss.entropy;
            stats.approx_kl += loss.approx_kl;
            stats.clip_fraction += loss.clip_fraction;
            stats.optimizer_steps += 1;

            if let Some(aux) = on_minibatch(idx)? {
                aux_sum += aux;
                aux_count += 1;
            }
        }
    }
    let steps = stats.optimizer_steps as f64;
    stats.policy_loss /= steps;
    stats.value_loss_ext /= steps;
    stats.value_loss_int /= steps;
    stats.entropy /= steps;
    stats.approx_kl /= steps;
    stats.clip_fraction /= steps;
    stats.aux_loss = if aux_count > 0 { aux_sum / aux_count as f64 } else { 0.0 };
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numnet::AdamConfig;
    use crate::rng::stream_rng;
    use ndarray::{array, Array1};

    fn params() -> PpoParams {
        PpoParams {
            entropy_coef: 0.0,
            value_coef: 0.0,
            ..PpoParams::default()
        }
    }

    #[test]
    fn surrogate_is_mean_advantage_at_unit_ratio() {
        let policy = PolicyNet::new(3, &[8], 3, 0).unwrap();
        let obs = Array2::from_shape_fn((6, 3), |(i, j)| (i + j) as f64 * 0.1);
        let actions = vec![0, 1, 2, 0, 1, 2];
        let out = policy.evaluate(obs.view()).unwrap();
        let old: Array1<f64> = actions
            .iter()
            .enumerate()
            .map(|(i, &a)| log_softmax(out.logits.row(i))[a])
            .collect();
        let adv = array![1.0, -2.0, 0.5, 3.0, -0.25, 0.0];
        let zeros = Array1::zeros(6);
        let (loss, _) = minibatch_loss(
            &policy,
            obs.view(),
            &actions,
            old.view(),
            adv.view(),
            zeros.view(),
            zeros.view(),
            &params(),
        )
        .unwrap();
        assert!((loss.surrogate - adv.mean().unwrap()).abs() < 1e-12);
        assert_eq!(loss.clip_fraction, 0.0);
    }

    #[test]
    fn clipped_branch_selected_and_gradient_vanishes() {
        let policy = PolicyNet::new(2, &[4], 2, 1).unwrap();
        let obs = array![[0.3, -0.7]];
        let out = policy.evaluate(obs.view()).unwrap();
        let logp = log_softmax(out.logits.row(0))[0];
        // rho = 2 with a positive advantage: min picks 1.1 * A and the policy gets no gradient.
        let old = array![logp - 2f64.ln()];
        let adv = array![0.8];
        let zeros = Array1::zeros(1);
        let (loss, grads) = minibatch_loss(
            &policy,
            obs.view(),
            &[0],
            old.view(),
            adv.view(),
            zeros.view(),
            zeros.view(),
            &params(),
        )
        .unwrap();
        assert!((loss.surrogate - 1.1 * 0.8).abs() < 1e-12);
        assert!(grads.iter().all(|&g| g == 0.0));
        assert_eq!(loss.clip_fraction, 1.0);
    }

    #[test]
    fn two_armed_bandit_converges() {
        let mut policy = PolicyNet::new(1, &[8], 2, 3).unwrap();
        let mut opt = AdamState::new(policy.net(), AdamConfig::with_lr(0.01));
        let mut rng = stream_rng(3, 0);
        let obs = Array2::ones((32, 1));
        for _ in 0..200 {
            let act = policy.act(obs.view(), &mut rng).unwrap();
            let rewards: Array1<f64> = act.actions.iter().map(|&a| if a == 0 { 1.0 } else { 0.0 }).collect();
            let batch = PpoBatch {
                obs: obs.clone(),
                actions: act.actions.clone(),
                old_log_probs: act.log_probs.clone(),
                advantages: &rewards - &act.value_ext,
                returns_ext: rewards,
                returns_int: Array1::zeros(32),
            };
            ppo_update(&mut policy, &mut opt, &batch, &PpoParams::default(), &mut rng, |_| Ok(None)).unwrap();
        }
        let logits = policy.evaluate(obs.slice(ndarray::s![..1, ..])).unwrap().logits;
        let p0 = log_softmax(logits.row(0))[0].exp();
        assert!(p0 > 0.95, "pi(arm 0) = {p0}");
    }

    #[test]
    fn rejects_too_many_minibatches() {
        let mut policy = PolicyNet::new(1, &[4], 2, 0).unwrap();
        let mut opt = AdamState::new(policy.net(), AdamConfig::default());
        let batch = PpoBatch {
            obs: Array2::zeros((2, 1)),
            actions: vec![0, 1],
            old_log_probs: Array1::zeros(2),
            advantages: Array1::zeros(2),
            returns_ext: Array1::zeros(2),
            returns_int: Array1::zeros(2),
        };
        let mut rng = stream_rng(0, 0);
        let err = ppo_update(&mut policy, &mut opt, &batch, &PpoParams::default(), &mut rng, |_| Ok(None));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn non_finite_loss_aborts_with_diagnostics() {
        let mut policy = PolicyNet::new(1, &[4], 2, 0).unwrap();
        let mut opt = AdamState::new(policy.net(), AdamConfig::default());
        let batch = PpoBatch {
            obs: Array2::zeros((4, 1)),
            actions: vec![0, 1, 0, 1],
            old_log_probs: Array1::zeros(4),
            advantages: Array1::zeros(4),
            returns_ext: array![f64::NAN, 0.0, 0.0, 0.0],
            returns_int: Array1::zeros(4),
        };
        let mut rng = stream_rng(0, 0);
        let err = ppo_update(&mut policy, &mut opt, &batch, &PpoParams::default(), &mut rng, |_| Ok(None)).unwrap_err();
        match err {
            Error::NonFinite(msg) => assert!(msg.contains("returns_ext")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
