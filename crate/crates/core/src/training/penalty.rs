//! Weight penalties with analytic (sub)gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{induced_norm, max_sum_subgradient, power_iteration, Matrix, Norm, SpectralTriple};
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    None,
    /// `scale·∏ℓ ‖Wℓ‖_p`
    TrivialProduct,
    /// `Σℓ ½‖Wℓ‖_F²`
    Frobenius,
    /// `Σℓ ½‖Wℓ‖₂²`
    Y17,
    /// `Σℓ ½‖Wℓ‖₂² − ‖Wℓ‖_F²/(2nℓ)`, `nℓ` the larger dimension
    N24,
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "none" => Self::None,
            "trivial_product" | "trivial" => Self::TrivialProduct,
            "frobenius" => Self::Frobenius,
            "y17" => Self::Y17,
            "n24" => Self::N24,
            other => return Err(Error::Config(format!("unknown penalty '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub norm_p: Norm,
    pub scale: f64,
}

impl Default for PenaltySpec {
    fn default() -> Self {
        Self::none()
    }
}

impl PenaltySpec {
    pub fn none() -> Self {
        Self { kind: PenaltyKind::None, lambda: 0.0, norm_p: Norm::L2, scale: 1.0 }
    }

    pub fn new(kind: PenaltyKind, lambda: f64) -> Self {
        Self { kind, lambda, norm_p: Norm::L2, scale: 1.0 }
    }

    pub fn trivial_product(lambda: f64, p: Norm) -> Self {
        Self { kind: PenaltyKind::TrivialProduct, lambda, norm_p: p, scale: 1.0 }
    }

    /// Rescale a p = 1 product by `1/√outputs` and a p = ∞ product by `1/√inputs`.
    pub fn with_dimension_scaling(mut self, inputs: usize, outputs: usize) -> Self {
        self.scale = match self.norm_p {
            Norm::L1 => 1.0 / (outputs as f64).sqrt(),
            Norm::Inf => 1.0 / (inputs as f64).sqrt(),
            Norm::L2 => 1.0,
        };
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("penalty lambda {} must be ≥ 0", self.lambda)));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Config(format!("penalty scale {} must be > 0", self.scale)));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.kind != PenaltyKind::None && self.lambda > 0.0
    }
}

/// Evaluates a penalty while keeping one warm-start vector per layer, so the
/// spectral norms of slowly changing weights cost a few iterations each.
#[derive(Debug, Clone)]
pub struct PenaltyEvaluator {
    spec: PenaltySpec,
    warm: Vec<Option<Vec<f64>>>,
}

impl PenaltyEvaluator {
    pub fn new(spec: PenaltySpec) -> Self {
        Self { spec, warm: Vec::new() }
    }

    pub fn spec(&self) -> &PenaltySpec {
        &self.spec
    }

    fn spectral(&mut self, idx: usize, w: &Matrix) -> SpectralTriple {
        if self.warm.len() <= idx {
            self.warm.resize(idx + 1, None);
        }
        let t = power_iteration(w, self.warm[idx].as_deref());
        self.warm[idx] = Some(t.v.clone());
        t
    }

    /// Raw penalty value (without `λ`) and its gradient for each weight.
    pub fn value_and_grads(&mut self, weights: &[&Matrix]) -> (f64, Vec<Matrix>) {
        let zeros = || weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect();
        match self.spec.kind {
            PenaltyKind::None => (0.0, zeros()),
            PenaltyKind::Frobenius => {
                let v = weights.iter().map(|w| 0.5 * w.frobenius_norm().powi(2)).sum();
                (v, weights.iter().map(|w| (*w).clone()).collect())
            }
            PenaltyKind::Y17 | PenaltyKind::N24 => {
                let n24 = self.spec.kind == PenaltyKind::N24;
                let mut value = 0.0;
                let mut grads = Vec::with_capacity(weights.len());
                for (i, w) in weights.iter().enumerate() {
                    let t = self.spectral(i, w);
                    let mut g = t.outer().scaled(t.sigma);
                    value += 0.5 * t.sigma * t.sigma;
                    if n24 {
                        let n = w.rows().max(w.cols()) as f64;
                        value -= w.frobenius_norm().powi(2) / (2.0 * n);
                        g.add_scaled_mut(-1.0 / n, w);
                    }
                    grads.push(g);
                }
                (value, grads)
            }
            PenaltyKind::TrivialProduct => {
                let p = self.spec.norm_p;
                let mut norms = Vec::with_capacity(weights.len());
                let mut subgrads = Vec::with_capacity(weights.len());
                for (i, w) in weights.iter().enumerate() {
                    if p == Norm::L2 {
                        let t = self.spectral(i, w);
                        norms.push(t.sigma);
                        subgrads.push(t.outer());
                    } else {
                        norms.push(induced_norm(w, p).unwrap_or(f64::NAN));
                        subgrads.push(max_sum_subgradient(w, p));
                    }
                }
                let value = self.spec.scale * norms.iter().product::<f64>();
                // product rule without dividing by a zero factor
                let grads = (0..weights.len())
                    .map(|j| {
                        let others: f64 = norms
                            .iter()
                            .enumerate()
                            .filter(|&(k, _)| k != j)
                            .map(|(_, n)| n)
                            .product();
                        let coef = if norms[j] == 0.0 { 0.0 } else { self.spec.scale * others };
                        subgrads[j].scaled(coef)
                    })
                    .collect();
                (value, grads)
            }
        }
    }
}

/// Penalty value (without `λ`) and per-layer weight gradients, from cold starts.
pub fn penalty_value_and_grads(net: &Network, spec: &PenaltySpec) -> (f64, Vec<Matrix>) {
    let weights: Vec<&Matrix> = net.layers().iter().map(|l| &l.weight).collect();
    PenaltyEvaluator::new(*spec).value_and_grads(&weights)
}
