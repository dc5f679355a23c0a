//! Multilayer polyactivation networks in the canonical form
//! `Linear → σ → Linear → σ → … → Linear(+bias)`.

mod checkpoint;
pub mod fixtures;
mod init;
mod w23;

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::{gemm, induced_norm, power_iteration, Matrix, MatRef, Norm};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use init::{kaiming_uniform_init, random_phase_init, random_phase_pair};
pub use w23::{w23_backward, w23_parameterize};

/// One affine map followed by an optional polyactivation.
///
/// `weight` is `rows × (K_prev · d_prev)`, acting on the previous layer's
/// fanned-out output. A hidden layer with `activation: None` is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub activation: Option<Activation>,
    pub bias: Option<Vec<f64>>,
}

impl Layer {
    pub fn new(weight: Matrix, activation: Option<Activation>, bias: Option<Vec<f64>>) -> Self {
        Self {
            weight,
            activation,
            bias,
        }
    }

    pub fn linear(weight: Matrix) -> Self {
        Self::new(weight, None, None)
    }

    /// Width of the output after the activation fan-out.
    pub fn fan_out(&self) -> usize {
        self.weight.rows() * self.activation.map_or(1, Activation::order)
    }
}

/// Gradient of a scalar with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Option<Vec<f64>>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &Layer) -> Self {
        Self {
            weight: Matrix::zeros(layer.weight.rows(), layer.weight.cols()),
            bias: layer.bias.as_ref().map(|b| vec![0.0; b.len()]),
        }
    }
}

/// Per-layer intermediate values of a batched forward pass; rows are samples.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[ℓ]` enters layer `ℓ`; `inputs[0]` is the batch itself.
    pub inputs: Vec<Matrix>,
    /// Pre-activations `Zℓ = inputs[ℓ]·Wℓᵀ + bℓ`; the last one is the output.
    pub pre: Vec<Matrix>,
}

impl Trace {
    pub fn output(&self) -> &Matrix {
        self.pre.last().expect("trace of an empty network")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    input_dim: usize,
    norm_p: Norm,
}

impl Network {
    /// Validates the dimension chain, finiteness, and the sinusoidal no-bias rule.
    pub fn new(input_dim: usize, layers: Vec<Layer>, norm_p: Norm) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        let mut width = input_dim;
        for (i, l) in layers.iter().enumerate() {
            if l.weight.cols() != width {
                return Err(Error::Dimension(format!(
                    "layer {i} expects {} inputs, previous width is {width}",
                    l.weight.cols()
                )));
            }
            if !l.weight.is_finite() {
                return Err(Error::NonFinite);
            }
            if let Some(b) = &l.bias {
                if b.len() != l.weight.rows() {
                    return Err(Error::Dimension(format!(
                        "layer {i} bias has length {}, expected {}",
                        b.len(),
                        l.weight.rows()
                    )));
                }
                if b.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite);
                }
                if l.activation == Some(Activation::SinCos) {
                    return Err(Error::InvalidArgument(format!(
                        "sincos layer {i} carries a bias; absorb it into the next layer"
                    )));
                }
            }
            width = l.fan_out();
        }
        if layers.last().unwrap().activation.is_some() {
            return Err(Error::InvalidArgument("final layer must be affine".into()));
        }
        Ok(Self {
            layers,
            input_dim,
            norm_p,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.rows()
    }

    pub fn norm_p(&self) -> Norm {
        self.norm_p
    }

    pub fn with_norm_p(mut self, p: Norm) -> Self {
        self.norm_p = p;
        self
    }

    /// Hidden activations in order (one per non-final layer).
    pub fn hidden_activations(&self) -> Vec<Option<Activation>> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.activation)
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        Ok(self.forward_batch(&Matrix::row_vector(x)).into_vec())
    }

    /// Logits for every row of `x`.
    pub fn forward_batch(&self, x: &Matrix) -> Matrix {
        let mut a = x.clone();
        for l in &self.layers {
            let z = affine(l, &a);
            a = match l.activation {
                Some(act) => act.apply_rows(&z),
                None => z,
            };
        }
        a
    }

    pub fn trace(&self, x: &Matrix) -> Trace {
        assert_eq!(x.cols(), self.input_dim, "trace: input width mismatch");
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for l in &self.layers {
            let z = affine(l, &a);
            let next = match l.activation {
                Some(act) => act.apply_rows(&z),
                None => z.clone(),
            };
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    /// Reverse-mode pass from `g_out = ∂loss/∂output` (one row per sample).
    ///
    /// Returns parameter gradients when `weights` is set (summed over rows) and
    /// the gradient with respect to the inputs when `inputs` is set.
    pub fn backward(
        &self,
        trace: &Trace,
        g_out: &Matrix,
        weights: bool,
        inputs: bool,
    ) -> (Vec<LayerGrad>, Option<Matrix>) {
        let n = g_out.rows();
        let mut grads = Vec::new();
        let mut g = g_out.clone();
        for (idx, l) in self.layers.iter().enumerate().rev() {
            if weights {
                let mut dw = Matrix::zeros(l.weight.rows(), l.weight.cols());
                gemm(
                    1.0,
                    MatRef::new(&g).t(),
                    MatRef::new(&trace.inputs[idx]),
                    0.0,
                    &mut dw,
                );
                let db = l.bias.as_ref().map(|_| {
                    let mut s = vec![0.0; g.cols()];
                    for r in 0..n {
                        s.iter_mut().zip(g.row(r)).for_each(|(a, b)| *a += b);
                    }
                    s
                });
                grads.push(LayerGrad {
                    weight: dw,
                    bias: db,
                });
            }
            if idx == 0 && !inputs {
                break;
            }
            let mut da = Matrix::zeros(n, l.weight.cols());
            gemm(1.0, MatRef::new(&g), MatRef::new(&l.weight), 0.0, &mut da);
            if idx == 0 {
                grads.reverse();
                return (grads, Some(da));
            }
            let prev = &self.layers[idx - 1];
            g = match prev.activation {
                Some(act) => contract_derivative(act, &trace.pre[idx - 1], &da),
                None => da,
            };
        }
        grads.reverse();
        (grads, None)
    }

    /// Exact Jacobian `∂f/∂x` (output_dim × input_dim).
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        self.check_input(x.len())?;
        let trace = self.trace(&Matrix::row_vector(x));
        let last = self.layers.len() - 1;
        let mut j = self.layers[last].weight.clone();
        for idx in (0..last).rev() {
            let l = &self.layers[idx];
            if let Some(act) = l.activation {
                let z = trace.pre[idx].row(0);
                let d = act.derivative_stack(z);
                let width = z.len();
                let mut jr = Matrix::zeros(j.rows(), width);
                for r in 0..j.rows() {
                    let src = j.row(r);
                    let dst = jr.row_mut(r);
                    for k in 0..act.order() {
                        for i in 0..width {
                            dst[i] += src[k * width + i] * d[k * width + i];
                        }
                    }
                }
                j = jr;
            }
            j = j.matmul(&l.weight);
        }
        Ok(j)
    }

    /// Per-layer induced norms `‖Wℓ‖_p`.
    pub fn layer_norms(&self, p: Norm) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| match p {
                Norm::L2 => power_iteration(&l.weight, None).sigma,
                _ => induced_norm(&l.weight, p).unwrap_or(f64::NAN),
            })
            .collect()
    }

    /// `K = ∏ℓ lip(σℓ, p)·‖Wℓ‖_p`; biases do not enter.
    pub fn trivial_bound(&self, p: Norm) -> f64 {
        let lip: f64 = self
            .hidden_activations()
            .into_iter()
            .flatten()
            .map(|a| a.lipschitz_constant(p))
            .product();
        lip * self.layer_norms(p).into_iter().product::<f64>()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.as_ref().map_or(0, Vec::len))
            .sum()
    }

    /// All weights then biases, layer by layer, as one flat vector.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            if let Some(b) = &l.bias {
                out.extend_from_slice(b);
            }
        }
        out
    }

    /// Inverse of [`params`](Self::params).
    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "set_params: length mismatch");
        let mut off = 0;
        for l in &mut self.layers {
            let n = l.weight.as_slice().len();
            l.weight.as_mut_slice().copy_from_slice(&flat[off..off + n]);
            off += n;
            if let Some(b) = &mut l.bias {
                let n = b.len();
                b.copy_from_slice(&flat[off..off + n]);
                off += n;
            }
        }
    }

    /// Rescale the unit between layers `ℓ` and `ℓ+1` by `Λ = diag(λ, 1, …, 1)`:
    /// `(Wℓ, bℓ, Wℓ₊₁) ↦ (Λ⁻¹Wℓ, Λ⁻¹bℓ, Wℓ₊₁Λ)`. The function is unchanged
    /// for positively homogeneous activations.
    pub fn relu_rescale(&self, layer: usize, lambda: f64) -> Result<Network> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("rescale factor {lambda} must be > 0")));
        }
        if layer + 1 >= self.layers.len() {
            return Err(Error::InvalidArgument(format!("no layer after {layer}")));
        }
        let act = self.layers[layer].activation;
        if !act.is_some_and(Activation::is_positively_homogeneous) {
            return Err(Error::InvalidArgument(
                "rescaling needs a positively homogeneous activation".into(),
            ));
        }
        let act = act.unwrap();
        let mut layers = self.layers.clone();
        let inv = 1.0 / lambda;
        let cur = &mut layers[layer];
        cur.weight.row_mut(0).iter_mut().for_each(|w| *w *= inv);
        if let Some(b) = &mut cur.bias {
            b[0] *= inv;
        }
        let width = cur.weight.rows();
        let next = &mut layers[layer + 1].weight;
        for r in 0..next.rows() {
            for k in 0..act.order() {
                let v = next.get(r, k * width);
                next.set(r, k * width, v * lambda);
            }
        }
        Network::new(self.input_dim, layers, self.norm_p)
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim {
            return Err(Error::Dimension(format!(
                "input has length {len}, network expects {}",
                self.input_dim
            )));
        }
        Ok(())
    }
}

fn affine(l: &Layer, a: &Matrix) -> Matrix {
    let mut z = Matrix::zeros(a.rows(), l.weight.rows());
    if let Some(b) = &l.bias {
        for r in 0..z.rows() {
            z.row_mut(r).copy_from_slice(b);
        }
        gemm(1.0, MatRef::new(a), MatRef::new(&l.weight).t(), 1.0, &mut z);
    } else {
        gemm(1.0, MatRef::new(a), MatRef::new(&l.weight).t(), 0.0, &mut z);
    }
    z
}

// Pull a gradient on the fanned-out activations back to the pre-activations:
// g[i] = Σₖ da[k·d + i]·σₖ′(z[i]).
fn contract_derivative(act: Activation, z: &Matrix, da: &Matrix) -> Matrix {
    let d = z.cols();
    let k = act.order();
    let mut g = Matrix::zeros(z.rows(), d);
    let mut deriv = vec![0.0; d * k];
    for r in 0..z.rows() {
        act.derivative_into(z.row(r), &mut deriv);
        let src = da.row(r);
        let dst = g.row_mut(r);
        for kk in 0..k {
            let off = kk * d;
            for i in 0..d {
                dst[i] += src[off + i] * deriv[off + i];
            }
        }
    }
    g
}

/// Rewrite `A cos(z + b) + B sin(z + b)` as `A′ cos z + B′ sin z` with
/// `A′ = A·Cos b + B·Sin b` and `B′ = B·Cos b − A·Sin b`.
///
/// The map `(A B) ↦ (A′ B′)` is a rotation per column pair, so `‖(A B)‖₂`
/// is preserved.
pub fn absorb_bias(a: &Matrix, b: &Matrix, bias: &[f64]) -> Result<(Matrix, Matrix)> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "A is {:?} but B is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if bias.len() != a.cols() {
        return Err(Error::Dimension(format!(
            "bias has length {}, expected {}",
            bias.len(),
            a.cols()
        )));
    }
    let (sin, cos): (Vec<f64>, Vec<f64>) = bias.iter().map(|v| v.sin_cos()).unzip();
    let a2 = a.scale_columns(&cos).add(&b.scale_columns(&sin));
    let b2 = b.scale_columns(&cos).sub(&a.scale_columns(&sin));
    Ok((a2, b2))
}

/// Absorb a sinusoidal hidden bias into the following `(A B)` weight block.
pub fn absorb_bias_into_block(ab: &Matrix, bias: &[f64]) -> Result<Matrix> {
    let n = bias.len();
    if ab.cols() != 2 * n {
        return Err(Error::Dimension(format!(
            "block has {} columns, expected {}",
            ab.cols(),
            2 * n
        )));
    }
    let (a, b) = absorb_bias(&ab.col_block(0, n), &ab.col_block(n, n), bias)?;
    Ok(a.hstack(&b))
}
