//! Trainable parameterizations that produce a [`Network`].

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, Matrix, SpectralTriple};
use crate::network::{w23_backward, w23_parameterize, Layer, LayerGrad, Network};

/// A map from a flat parameter vector to a network.
pub trait Model {
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]);
    /// Network at the current parameters.
    fn network(&mut self) -> Result<Network>;
    /// Chain rule from per-layer network gradients to the flat parameters,
    /// evaluated at the point of the latest [`network`](Self::network) call.
    fn pullback(&self, grads: &[LayerGrad]) -> Result<Vec<f64>>;
    /// Network to keep after training. Constrained models recompute their
    /// normalizers from scratch here.
    fn finalize(&mut self) -> Result<Network> {
        self.network()
    }
}

fn flatten(grads: &[LayerGrad]) -> Vec<f64> {
    let mut out = Vec::new();
    for g in grads {
        out.extend_from_slice(g.weight.as_slice());
        if let Some(b) = &g.bias {
            out.extend_from_slice(b);
        }
    }
    out
}

/// Weights are the parameters.
#[derive(Debug, Clone)]
pub struct DirectModel {
    net: Network,
}

impl DirectModel {
    pub fn new(net: Network) -> Self {
        Self { net }
    }

    pub fn into_network(self) -> Network {
        self.net
    }
}

impl Model for DirectModel {
    fn params(&self) -> Vec<f64> {
        self.net.params()
    }

    fn set_params(&mut self, params: &[f64]) {
        self.net.set_params(params);
    }

    fn network(&mut self) -> Result<Network> {
        Ok(self.net.clone())
    }

    fn pullback(&self, grads: &[LayerGrad]) -> Result<Vec<f64>> {
        Ok(flatten(grads))
    }
}

fn with_weights(template: &Network, weights: Vec<Matrix>) -> Result<Network> {
    let layers = template
        .layers()
        .iter()
        .zip(weights)
        .map(|(l, w)| Layer::new(w, l.activation, l.bias.clone()))
        .collect();
    Network::new(template.input_dim(), layers, template.norm_p())
}

/// `Wℓ = c·Vℓ / max(1, ‖Vℓ‖₂)`, so every layer satisfies `‖Wℓ‖₂ ≤ c`.
#[derive(Debug, Clone)]
pub struct NormBallModel {
    raw: Network,
    layer_scale: f64,
    warm: Vec<Option<Vec<f64>>>,
    triples: Vec<SpectralTriple>,
}

impl NormBallModel {
    /// `raw` holds the unconstrained `Vℓ` and the biases; `bound` is the
    /// target product `c^L` over all `L` layers.
    pub fn new(raw: Network, bound: f64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::InvalidArgument(format!("bound {bound} must be positive")));
        }
        let n = raw.layers().len();
        Ok(Self {
            layer_scale: bound.powf(1.0 / n as f64),
            warm: vec![None; n],
            triples: Vec::new(),
            raw,
        })
    }

    pub fn layer_scale(&self) -> f64 {
        self.layer_scale
    }
}

impl Model for NormBallModel {
    fn params(&self) -> Vec<f64> {
        self.raw.params()
    }

    fn set_params(&mut self, params: &[f64]) {
        self.raw.set_params(params);
    }

    fn network(&mut self) -> Result<Network> {
        let c = self.layer_scale;
        self.triples.clear();
        let mut weights = Vec::with_capacity(self.warm.len());
        for (i, l) in self.raw.layers().iter().enumerate() {
            let t = power_iteration(&l.weight, self.warm[i].as_deref());
            self.warm[i] = Some(t.v.clone());
            weights.push(l.weight.scaled(c / t.sigma.max(1.0)));
            self.triples.push(t);
        }
        with_weights(&self.raw, weights)
    }

    fn finalize(&mut self) -> Result<Network> {
        self.warm.iter_mut().for_each(|w| *w = None);
        self.network()
    }

    fn pullback(&self, grads: &[LayerGrad]) -> Result<Vec<f64>> {
        let c = self.layer_scale;
        let mut out = Vec::with_capacity(self.raw.param_count());
        for ((g, t), l) in grads.iter().zip(&self.triples).zip(self.raw.layers()) {
            let gv = if t.sigma <= 1.0 {
                g.weight.scaled(c)
            } else {
                // d(V/σ) = dV/σ − V⟨uvᵀ, dV⟩/σ²
                let coef = g.weight.inner(&l.weight) / t.sigma;
                let mut gv = g.weight.clone();
                gv.add_scaled_mut(-coef, &t.outer());
                gv.scaled(c / t.sigma)
            };
            out.extend_from_slice(gv.as_slice());
            if let Some(b) = &g.bias {
                out.extend_from_slice(b);
            }
        }
        Ok(out)
    }
}

/// `Wℓ = c·w23(Xℓ, Yℓ)` with `Xℓ` square in the output width and `Yℓ` of
/// shape `in × out`.
#[derive(Debug, Clone)]
pub struct W23Model {
    template: Network,
    xs: Vec<Matrix>,
    ys: Vec<Matrix>,
    layer_scale: f64,
}

impl W23Model {
    /// `template` fixes shapes, activations and initial biases; `(X, Y)`
    /// start at `X = 0` and `Y = ¼·Wᵀ` so small weights are reproduced
    /// approximately.
    pub fn new(template: Network, bound: f64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::InvalidArgument(format!("bound {bound} must be positive")));
        }
        let n = template.layers().len();
        let c = bound.powf(1.0 / n as f64);
        let xs = template.layers().iter().map(|l| Matrix::zeros(l.weight.rows(), l.weight.rows())).collect();
        let ys = template.layers().iter().map(|l| l.weight.transpose().scaled(0.25 / c)).collect();
        Ok(Self { template, xs, ys, layer_scale: c })
    }
}

impl Model for W23Model {
    fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for ((x, y), l) in self.xs.iter().zip(&self.ys).zip(self.template.layers()) {
            out.extend_from_slice(x.as_slice());
            out.extend_from_slice(y.as_slice());
            if let Some(b) = &l.bias {
                out.extend_from_slice(b);
            }
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) {
        let mut off = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&params[off..off + dst.len()]);
            off += dst.len();
        };
        let mut layers = self.template.clone().into_layers();
        for ((x, y), l) in self.xs.iter_mut().zip(&mut self.ys).zip(&mut layers) {
            take(x.as_mut_slice());
            take(y.as_mut_slice());
            if let Some(b) = &mut l.bias {
                take(b);
            }
        }
        assert_eq!(off, params.len(), "set_params: length mismatch");
        self.template = Network::new(self.template.input_dim(), layers, self.template.norm_p())
            .expect("shapes are unchanged");
    }

    fn network(&mut self) -> Result<Network> {
        let weights = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| w23_parameterize(x, y).map(|w| w.scaled(self.layer_scale)))
            .collect::<Result<Vec<_>>>()?;
        with_weights(&self.template, weights)
    }

    fn pullback(&self, grads: &[LayerGrad]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for ((x, y), g) in self.xs.iter().zip(&self.ys).zip(grads) {
            let (gx, gy) = w23_backward(x, y, &g.weight.scaled(self.layer_scale))?;
            out.extend_from_slice(gx.as_slice());
            out.extend_from_slice(gy.as_slice());
            if let Some(b) = &g.bias {
                out.extend_from_slice(b);
            }
        }
        Ok(out)
    }
}
