use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numnet::{DenseNet, ForwardCache, InitScheme, NetSpec};

/// Categorical policy with two scalar value heads on a shared trunk.
///
/// A single dense net whose last layer emits `num_actions` logits followed by
/// `V_E` and `V_I`; everything before the last layer is the shared trunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    net: DenseNet,
    num_actions: usize,
}

#[derive(Debug, Clone)]
pub struct PolicyOutput {
    pub logits: Array2<f64>,
    pub value_ext: Array1<f64>,
    pub value_int: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct ActOutput {
    pub actions: Vec<usize>,
    pub log_probs: Array1<f64>,
    pub value_ext: Array1<f64>,
    pub value_int: Array1<f64>,
}

impl PolicyNet {
    pub fn new(obs_dim: usize, hidden: &[usize], num_actions: usize, seed: u64) -> Result<Self> {
        if num_actions < 1 {
            return Err(Error::InvalidArgument("policy needs at least one action".into()));
        }
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(num_actions + 2);
        let mut net = DenseNet::new(NetSpec::new(sizes, InitScheme::orthogonal_relu()), seed)?;
        // Near-uniform initial policy (gain 0.01) and unit-gain value heads.
        let gain = std::f64::consts::SQRT_2;
        let (ws, _) = net.params_mut();
        let head = ws.last_mut().unwrap();
        head.slice_mut(s![..num_actions, ..]).mapv_inplace(|w| w * 0.01 / gain);
        head.slice_mut(s![num_actions.., ..]).mapv_inplace(|w| w / gain);
        Ok(Self { net, num_actions })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn split(&self, out: &Array2<f64>) -> PolicyOutput {
        let a = self.num_actions;
        PolicyOutput {
            logits: out.slice(s![.., ..a]).to_owned(),
            value_ext: out.column(a).to_owned(),
            value_int: out.column(a + 1).to_owned(),
        }
    }

    pub fn evaluate(&self, obs: ArrayView2<f64>) -> Result<PolicyOutput> {
        let out = self.net.predict(obs)?;
        Ok(self.split(&out))
    }

    pub fn forward(&self, obs: ArrayView2<f64>) -> Result<(PolicyOutput, ForwardCache)> {
        let (out, cache) = self.net.forward(obs)?;
        Ok((self.split(&out), cache))
    }

    /// Samples one action per row and evaluates both value heads.
    pub fn act<R: Rng + ?Sized>(&self, obs: ArrayView2<f64>, rng: &mut R) -> Result<ActOutput> {
        let out = self.evaluate(obs)?;
        let mut actions = Vec::with_capacity(obs.nrows());
        let mut log_probs = Array1::zeros(obs.nrows());
        for (i, row) in out.logits.rows().into_iter().enumerate() {
            let logp = log_softmax(row);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = self.num_actions - 1;
            for (a, lp) in logp.iter().enumerate() {
                acc += lp.exp();
                if u < acc {
                    chosen = a;
                    break;
                }
            }
            // Never pick a zero-probability action through rounding at the tail.
            if logp[chosen] == f64::NEG_INFINITY {
                chosen = logp
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(a, _)| a)
                    .unwrap();
            }
            actions.push(chosen);
            log_probs[i] = logp[chosen];
        }
        Ok(ActOutput {
            actions,
            log_probs,
            value_ext: out.value_ext,
            value_int: out.value_int,
        })
    }
}

pub fn log_softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.mapv(|l| l - lse)
}

/// Entropy of the categorical distribution given by `logits`.
pub fn softmax_entropy(logits: ArrayView1<f64>) -> f64 {
    let logp = log_softmax(logits);
    -logp
        .iter()
        .map(|&lp| if lp == f64::NEG_INFINITY { 0.0 } else { lp.exp() * lp })
        .sum::<f64>()
}
