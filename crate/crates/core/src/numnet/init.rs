use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Weight initialization scheme. Biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    ScaledUniform,
    /// Orthogonal rows/columns scaled by `gain`.
    Orthogonal { gain: f64 },
}

impl InitScheme {
    pub fn orthogonal_relu() -> Self {
        InitScheme::Orthogonal {
            gain: std::f64::consts::SQRT_2,
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, fan_out: usize, fan_in: usize, rng: &mut R) -> Array2<f64> {
        match *self {
            InitScheme::ScaledUniform => {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-bound..=bound))
            }
            InitScheme::Orthogonal { gain } => orthogonal(fan_out, fan_in, rng) * gain,
        }
    }
}

/// Semi-orthogonal matrix: orthonormal rows if `rows <= cols`, else orthonormal columns.
pub(crate) fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (tall, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let mut q = Array2::<f64>::zeros((tall, short));
    for j in 0..short {
        // Redraw on the (measure-zero) chance of a degenerate column.
        loop {
            let mut v: Vec<f64> = (0..tall).map(|_| rng.sample(StandardNormal)).collect();
            for k in 0..j {
                let col = q.column(k);
                let proj: f64 = col.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(col.iter()) {
                    *vi -= proj * ci;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-10 {
                for (i, vi) in v.iter().enumerate() {
                    q[[i, j]] = vi / norm;
                }
                break;
            }
        }
    }
    if rows >= cols {
        q
    } else {
        q.reversed_axes().as_standard_layout().to_owned()
    }
}
