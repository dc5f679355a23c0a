use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{Layer, Network};
use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Norm};

/// Random-phase draw of `(A B)` with `A, B ∈ ℝ^{rows × cols}`:
/// `(A B) = (Ā B̄)·[[Cos θ, −Sin θ], [Sin θ, Cos θ]]`, `Ā, B̄ ~ N(0, α/cols)`,
/// `θ ~ U[0, 2π)^cols`. Returned as one `rows × 2·cols` block.
pub fn random_phase_pair<R: Rng + ?Sized>(rows: usize, cols: usize, alpha: f64, rng: &mut R) -> Matrix {
    let normal = Normal::new(0.0, (alpha / cols as f64).sqrt()).expect("alpha > 0");
    let a_bar = Matrix::from_fn(rows, cols, |_, _| normal.sample(rng));
    let b_bar = Matrix::from_fn(rows, cols, |_, _| normal.sample(rng));
    let theta: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.0..TAU)).collect();
    let (sin, cos): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| t.sin_cos()).unzip();
    let a = a_bar.scale_columns(&cos).add(&b_bar.scale_columns(&sin));
    let b = b_bar.scale_columns(&cos).sub(&a_bar.scale_columns(&sin));
    a.hstack(&b)
}

/// Sincos network with widths `dims = [input, hidden…, output]`.
///
/// The first linear map is Gaussian with variance `α/d₀`; every later
/// `(A B)` block uses [`random_phase_pair`]. The readout bias starts at zero.
pub fn random_phase_init<R: Rng + ?Sized>(
    dims: &[usize],
    alpha: f64,
    norm_p: Norm,
    rng: &mut R,
) -> Result<Network> {
    check_dims(dims)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
    }
    let normal = Normal::new(0.0, (alpha / dims[0] as f64).sqrt()).unwrap();
    let mut layers = Vec::with_capacity(dims.len() - 1);
    let last = dims.len() - 2;
    for i in 0..=last {
        let weight = if i == 0 {
            Matrix::from_fn(dims[1], dims[0], |_, _| normal.sample(rng))
        } else {
            random_phase_pair(dims[i + 1], dims[i], alpha, rng)
        };
        layers.push(if i == last {
            Layer::new(weight, None, Some(vec![0.0; dims[i + 1]]))
        } else {
            Layer::new(weight, Some(Activation::SinCos), None)
        });
    }
    Network::new(dims[0], layers, norm_p)
}

/// Uniform `U(±√(3/fan_in))` weights for non-sinusoidal activations, zero
/// biases on every layer (hidden biases only when `hidden_bias`).
pub fn kaiming_uniform_init<R: Rng + ?Sized>(
    dims: &[usize],
    activation: Activation,
    hidden_bias: bool,
    norm_p: Norm,
    rng: &mut R,
) -> Result<Network> {
    check_dims(dims)?;
    let mut layers = Vec::with_capacity(dims.len() - 1);
    let last = dims.len() - 2;
    let mut fan_in = dims[0];
    for i in 0..=last {
        let bound = (3.0 / fan_in as f64).sqrt();
        let u = Uniform::new_inclusive(-bound, bound);
        let weight = Matrix::from_fn(dims[i + 1], fan_in, |_, _| u.sample(rng));
        let is_last = i == last;
        let act = (!is_last).then_some(activation);
        let bias = (is_last || (hidden_bias && activation != Activation::SinCos))
            .then(|| vec![0.0; dims[i + 1]]);
        layers.push(Layer::new(weight, act, bias));
        fan_in = dims[i + 1] * act.map_or(1, Activation::order);
    }
    Network::new(dims[0], layers, norm_p)
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!("bad layer widths {dims:?}")));
    }
    Ok(())
}
