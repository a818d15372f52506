//! Dense feed-forward networks with hand-written backprop and Adam.
//!
//! Every learned function in the crate (policy, value heads, RND target and
//! predictor, dynamics model, autoencoder) is a [`DenseNet`]. Batches are
//! row-major: one sample per row.

mod adam;
mod init;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{AdamConfig, AdamState};
pub use init::InitScheme;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu => {
                if x > 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if pre > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Sigmoid,
}

/// Architecture and init metadata for a [`DenseNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: OutputActivation,
    pub init: InitScheme,
}

impl NetSpec {
    pub fn new(layer_sizes: Vec<usize>, init: InitScheme) -> Self {
        Self {
            layer_sizes,
            hidden_activation: Activation::Relu,
            output_activation: OutputActivation::Identity,
            init,
        }
    }

    pub fn hidden(mut self, activation: Activation) -> Self {
        self.hidden_activation = activation;
        self
    }

    pub fn output(mut self, activation: OutputActivation) -> Self {
        self.output_activation = activation;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    spec: NetSpec,
    seed: u64,
    /// Layer l maps `layer_sizes[l]` -> `layer_sizes[l + 1]`; weights are (out, in).
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    trainable: bool,
    /// Incremented on every parameter mutation; lets `backward` reject stale caches.
    version: u64,
}

/// Activations recorded by [`DenseNet::forward`], consumed by [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_sizes: Vec<usize>,
    version: u64,
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

/// Parameter-shaped container used for gradients and Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: net.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn matches(&self, net: &DenseNet) -> bool {
        self.weights.len() == net.weights.len()
            && self.biases.len() == net.biases.len()
            && self.weights.iter().zip(&net.weights).all(|(a, b)| a.dim() == b.dim())
            && self.biases.iter().zip(&net.biases).all(|(a, b)| a.dim() == b.dim())
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }
}

impl DenseNet {
    /// Builds a network whose parameters are a pure function of `(spec, seed)`.
    pub fn new(spec: NetSpec, seed: u64) -> Result<Self> {
        let sizes = &spec.layer_sizes;
        if sizes.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a dense net needs at least 2 layer sizes, got {}",
                sizes.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("layer sizes must be positive: {sizes:?}")));
        }
        let mut rng = stream_rng(seed, 0);
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            weights.push(spec.init.sample(pair[1], pair[0], &mut rng));
            biases.push(Array1::zeros(pair[1]));
        }
        Ok(Self {
            spec,
            seed,
            weights,
            biases,
            trainable: true,
            version: 0,
        })
    }

    pub fn frozen(mut self) -> Self {
        self.trainable = false;
        self
    }

    pub fn with_trainable(mut self, trainable: bool) -> Self {
        self.trainable = trainable;
        self
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.spec.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.spec.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.spec.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn is_trainable(&self) -> bool {
        self.trainable
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Direct parameter access. Bumps the version so outstanding caches go stale.
    pub fn params_mut(&mut self) -> (&mut [Array2<f64>], &mut [Array1<f64>]) {
        self.version += 1;
        (&mut self.weights, &mut self.biases)
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Output only; skips building a cache.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let last = self.num_layers() - 1;
        let mut h = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = h.dot(&w.t());
            z += b;
            if l < last {
                let act = self.spec.hidden_activation;
                z.mapv_inplace(|v| act.apply(v));
            } else if self.spec.output_activation == OutputActivation::Sigmoid {
                z.mapv_inplace(sigmoid);
            }
            h = z;
        }
        Ok(h)
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(&x)?;
        let last = self.num_layers() - 1;
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut h = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = h.dot(&w.t());
            z += b;
            let out = if l < last {
                let act = self.spec.hidden_activation;
                z.mapv(|v| act.apply(v))
            } else if self.spec.output_activation == OutputActivation::Sigmoid {
                z.mapv(sigmoid)
            } else {
                z.clone()
            };
            inputs.push(h);
            pre.push(z);
            h = out;
        }
        let cache = ForwardCache {
            layer_sizes: self.spec.layer_sizes.clone(),
            version: self.version,
            inputs,
            pre,
            output: h.clone(),
        };
        Ok((h, cache))
    }

    /// Exact gradients of a scalar loss given `d_out = dL/dY` for the cached batch.
    pub fn backward(&self, cache: &ForwardCache, d_out: ArrayView2<f64>) -> Result<(Gradients, Array2<f64>)> {
        if cache.layer_sizes != self.spec.layer_sizes || cache.version != self.version {
            return Err(Error::InvalidState(
                "forward cache does not belong to the current network parameters".into(),
            ));
        }
        if d_out.dim() != cache.output.dim() {
            return Err(Error::Shape(format!(
                "output gradient shape {:?} does not match output {:?}",
                d_out.dim(),
                cache.output.dim()
            )));
        }
        let n = self.num_layers();
        let mut grads = Gradients {
            weights: Vec::with_capacity(n),
            biases: Vec::with_capacity(n),
        };
        let mut delta = match self.spec.output_activation {
            OutputActivation::Identity => d_out.to_owned(),
            OutputActivation::Sigmoid => {
                let mut d = d_out.to_owned();
                ndarray::Zip::from(&mut d)
                    .and(&cache.output)
                    .for_each(|d, &s| *d *= s * (1.0 - s));
                d
            }
        };
        for l in (0..n).rev() {
            grads.weights.push(delta.t().dot(&cache.inputs[l]));
            grads.biases.push(delta.sum_axis(Axis(0)));
            let mut d_in = delta.dot(&self.weights[l]);
            if l > 0 {
                let act = self.spec.hidden_activation;
                ndarray::Zip::from(&mut d_in)
                    .and(&cache.pre[l - 1])
                    .for_each(|d, &z| *d *= act.derivative(z));
            }
            delta = d_in;
        }
        grads.weights.reverse();
        grads.biases.reverse();
        Ok((grads, delta))
    }

    /// Replaces all parameters with those of `other` (architectures must agree).
    pub fn copy_params_from(&mut self, other: &DenseNet) -> Result<()> {
        if other.spec.layer_sizes != self.spec.layer_sizes {
            return Err(Error::Shape("cannot copy parameters between different architectures".into()));
        }
        self.weights = other.weights.clone();
        self.biases = other.biases.clone();
        self.version += 1;
        Ok(())
    }

    /// Lossless binary snapshot of architecture, init metadata and row-major parameters.
    pub fn to_bytes(&self) -> Vec<u8> {
        bincode::serialize(self).expect("dense net serialization is infallible")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        bincode::deserialize(bytes).map_err(|e| Error::Snapshot(e.to_string()))
    }

    /// Perturbs every parameter with N(0, scale²) noise; only used to build test fixtures.
    pub fn jitter<R: Rng + ?Sized>(&mut self, scale: f64, rng: &mut R) {
        let (ws, bs) = self.params_mut();
        for w in ws.iter_mut() {
            w.mapv_inplace(|v| v + scale * rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        for b in bs.iter_mut() {
            b.mapv_inplace(|v| v + scale * rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
