//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rnd_core::numnet::{Activation, DenseNet, InitScheme, NetSpec, OutputActivation};

/// Random architecture with 2 to 4 layers of width 1..=6 and random activations.
pub fn random_net<R: Rng>(rng: &mut R) -> DenseNet {
    let depth = rng.random_range(2..=4);
    let sizes: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=6)).collect();
    let hidden = if rng.random_bool(0.5) { Activation::Relu } else { Activation::LeakyRelu };
    let output = if rng.random_bool(0.5) { OutputActivation::Identity } else { OutputActivation::Sigmoid };
    let init = if rng.random_bool(0.5) {
        InitScheme::ScaledUniform
    } else {
        InitScheme::orthogonal_relu()
    };
    let mut net = DenseNet::new(NetSpec::new(sizes, init).hidden(hidden).output(output), rng.random()).unwrap();
    // Non-zero biases so every code path is exercised.
    let (_, bs) = net.params_mut();
    for b in bs.iter_mut() {
        b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    net
}

fn weighted_loss(net: &DenseNet, x: ArrayView2<f64>, r: ArrayView2<f64>) -> f64 {
    (&net.predict(x).unwrap() * &r).sum()
}

/// Max relative error between backprop and central differences (step `h`) for
/// the scalar loss `sum(net(x) * r)`, over every parameter and input.
///
/// Entries where either gradient is below `floor` in magnitude are compared
/// with `floor` as the denominator.
pub fn gradcheck(net: &DenseNet, x: &Array2<f64>, r: &Array2<f64>, h: f64, floor: f64) -> f64 {
    let (_, cache) = net.forward(x.view()).unwrap();
    let (grads, dx) = net.backward(&cache, r.view()).unwrap();
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(floor);
    let mut worst = 0.0f64;

    let mut probe = net.clone();
    for l in 0..net.num_layers() {
        let (rows, cols) = net.weights()[l].dim();
        for i in 0..rows {
            for j in 0..cols {
                let base = net.weights()[l][[i, j]];
                probe.params_mut().0[l][[i, j]] = base + h;
                let up = weighted_loss(&probe, x.view(), r.view());
                probe.params_mut().0[l][[i, j]] = base - h;
                let down = weighted_loss(&probe, x.view(), r.view());
                probe.params_mut().0[l][[i, j]] = base;
                worst = worst.max(rel(grads.weights[l][[i, j]], (up - down) / (2.0 * h)));
            }
        }
        for i in 0..net.biases()[l].len() {
            let base = net.biases()[l][i];
            probe.params_mut().1[l][i] = base + h;
            let up = weighted_loss(&probe, x.view(), r.view());
            probe.params_mut().1[l][i] = base - h;
            let down = weighted_loss(&probe, x.view(), r.view());
            probe.params_mut().1[l][i] = base;
            worst = worst.max(rel(grads.biases[l][i], (up - down) / (2.0 * h)));
        }
    }
    let mut xp = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let base = x[[i, j]];
            xp[[i, j]] = base + h;
            let up = weighted_loss(net, xp.view(), r.view());
            xp[[i, j]] = base - h;
            let down = weighted_loss(net, xp.view(), r.view());
            xp[[i, j]] = base;
            worst = worst.max(rel(dx[[i, j]], (up - down) / (2.0 * h)));
        }
    }
    worst
}

/// Discounted reward sums for one env, cut at episode ends, bootstrapped
/// with `gamma^(T - t) * bootstrap` when no episode end follows `t`.
pub fn brute_force_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let n = rewards.len();
    (0..n)
        .map(|t| {
            let mut total = 0.0;
            let mut discount = 1.0;
            let mut k = t;
            loop {
                total += discount * rewards[k];
                if dones[k] {
                    return total;
                }
                discount *= gamma;
                k += 1;
                if k == n {
                    return total + discount * bootstrap;
                }
            }
        })
        .collect()
}

/// Mean and population variance per column, two passes.
pub fn two_pass(rows: ArrayView2<f64>) -> (Array1<f64>, Array1<f64>) {
    let n = rows.nrows() as f64;
    let mean = rows.sum_axis(ndarray::Axis(0)) / n;
    let mut var = Array1::zeros(rows.ncols());
    for row in rows.rows() {
        var += &(&row - &mean).mapv(|d| d * d);
    }
    (mean, var / n)
}

pub fn max_rel_diff(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}

/// Discounted forward sum `acc = gamma * acc + r` over a single stream; returns every visited value.
pub fn forward_accumulate(stream: &[f64], gamma: f64) -> Vec<f64> {
    let mut acc = 0.0;
    stream
        .iter()
        .map(|&r| {
            acc = gamma * acc + r;
            acc
        })
        .collect()
}

pub fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}
