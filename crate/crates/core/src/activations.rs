//! Polyactivations: tuples of scalar functions that fan a `d`-vector out to a
//! `K·d`-vector, with derivative stacks, Lipschitz constants and saturation
//! checks.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{Matrix, Norm};

/// Largest value of `sech²x + |sech x · tanh x| + |tanh x|`, attained near
/// `x ≈ 0.74326`.
pub const TANH3_L1_CONSTANT: f64 = 1.722_357_995_849_168;

/// Registered polyactivations.
///
/// `Tanh` is not saturated in any norm; it exists to build the tanh bias
/// fixtures and tightness checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[serde(rename = "sincos")]
    SinCos,
    Abs,
    #[serde(rename = "crelu")]
    CRelu,
    IdAbs,
    Tanh3,
    TanhPair,
    Relu,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 8] = [
        Activation::SinCos,
        Activation::Abs,
        Activation::CRelu,
        Activation::IdAbs,
        Activation::Tanh3,
        Activation::TanhPair,
        Activation::Relu,
        Activation::Tanh,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Activation::SinCos => "sincos",
            Activation::Abs => "abs",
            Activation::CRelu => "crelu",
            Activation::IdAbs => "id_abs",
            Activation::Tanh3 => "tanh3",
            Activation::TanhPair => "tanh_pair",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    /// Number of component functions `K`.
    pub fn order(self) -> usize {
        match self {
            Activation::Abs | Activation::Relu | Activation::Tanh => 1,
            Activation::SinCos | Activation::CRelu | Activation::IdAbs | Activation::TanhPair => 2,
            Activation::Tanh3 => 3,
        }
    }

    /// `σₖ(x)` for `k < order()`.
    #[inline]
    pub fn component(self, k: usize, x: f64) -> f64 {
        match (self, k) {
            (Activation::SinCos, 0) => x.cos(),
            (Activation::SinCos, 1) => x.sin(),
            (Activation::Abs, 0) => x.abs(),
            (Activation::CRelu, 0) | (Activation::Relu, 0) => x.max(0.0),
            (Activation::CRelu, 1) => (-x).max(0.0),
            (Activation::IdAbs, 0) => x,
            (Activation::IdAbs, 1) => x.abs(),
            (Activation::Tanh3, 0) | (Activation::TanhPair, 0) | (Activation::Tanh, 0) => x.tanh(),
            (Activation::Tanh3, 1) => sech(x),
            (Activation::Tanh3, 2) => log_cosh(x),
            (Activation::TanhPair, 1) => x - x.tanh(),
            _ => panic!("{} has no component {k}", self.id()),
        }
    }

    /// `σₖ′(x)`, with slope 0 at the kink of `|·|` and ReLU.
    #[inline]
    pub fn component_derivative(self, k: usize, x: f64) -> f64 {
        match (self, k) {
            (Activation::SinCos, 0) => -x.sin(),
            (Activation::SinCos, 1) => x.cos(),
            (Activation::Abs, 0) | (Activation::IdAbs, 1) => sign0(x),
            (Activation::CRelu, 0) | (Activation::Relu, 0) => step(x),
            (Activation::CRelu, 1) => -step(-x),
            (Activation::IdAbs, 0) => 1.0,
            (Activation::Tanh3, 0) | (Activation::TanhPair, 0) | (Activation::Tanh, 0) => {
                let s = sech(x);
                s * s
            }
            (Activation::Tanh3, 1) => -sech(x) * x.tanh(),
            (Activation::Tanh3, 2) => x.tanh(),
            (Activation::TanhPair, 1) => {
                let t = x.tanh();
                t * t
            }
            _ => panic!("{} has no component {k}", self.id()),
        }
    }

    /// Stacked output `(σ₁(x), …, σ_K(x))`; block `k` is `out[k·d..(k+1)·d]`.
    pub fn apply(self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len() * self.order()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_into(self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        assert_eq!(out.len(), d * self.order());
        match self {
            Activation::SinCos => {
                let (c, s) = out.split_at_mut(d);
                for ((xi, ci), si) in x.iter().zip(c).zip(s) {
                    let (sn, cs) = xi.sin_cos();
                    *ci = cs;
                    *si = sn;
                }
            }
            _ => {
                for k in 0..self.order() {
                    for (o, &xi) in out[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *o = self.component(k, xi);
                    }
                }
            }
        }
    }

    /// Entry `k·d + i` is `σₖ′(xᵢ)`.
    pub fn derivative_stack(self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len() * self.order()];
        self.derivative_into(x, &mut out);
        out
    }

    pub fn derivative_into(self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        assert_eq!(out.len(), d * self.order());
        match self {
            Activation::SinCos => {
                let (c, s) = out.split_at_mut(d);
                for ((xi, ci), si) in x.iter().zip(c).zip(s) {
                    let (sn, cs) = xi.sin_cos();
                    *ci = -sn;
                    *si = cs;
                }
            }
            _ => {
                for k in 0..self.order() {
                    for (o, &xi) in out[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *o = self.component_derivative(k, xi);
                    }
                }
            }
        }
    }

    /// Row-wise [`apply`](Self::apply) over a batch (`n × d` → `n × K·d`).
    pub fn apply_rows(self, z: &Matrix) -> Matrix {
        let k = self.order();
        let mut out = Matrix::zeros(z.rows(), z.cols() * k);
        for r in 0..z.rows() {
            self.apply_into(z.row(r), out.row_mut(r));
        }
        out
    }

    /// Row-wise [`derivative_stack`](Self::derivative_stack) over a batch.
    pub fn derivative_rows(self, z: &Matrix) -> Matrix {
        let k = self.order();
        let mut out = Matrix::zeros(z.rows(), z.cols() * k);
        for r in 0..z.rows() {
            self.derivative_into(z.row(r), out.row_mut(r));
        }
        out
    }

    /// Exact Lipschitz constant of the stacked map in the `p`-norm,
    /// `sup_x (Σₖ |σₖ′(x)|ᵖ)^{1/p}` (max over `k` for `p = ∞`).
    pub fn lipschitz_constant(self, p: Norm) -> f64 {
        match (self, p) {
            (Activation::SinCos, Norm::L1) => std::f64::consts::SQRT_2,
            (Activation::IdAbs, Norm::L1) => 2.0,
            (Activation::IdAbs, Norm::L2) => std::f64::consts::SQRT_2,
            (Activation::Tanh3, Norm::L1) => TANH3_L1_CONSTANT,
            _ => 1.0,
        }
    }

    /// Whether `Σₖ |σₖ′|ᵖ = 1` (all `|σₖ′| = 1` for `p = ∞`) almost everywhere.
    pub fn is_saturated(self, p: Norm) -> bool {
        matches!(
            (self, p),
            (Activation::SinCos, Norm::L2)
                | (Activation::Abs, _)
                | (Activation::CRelu, Norm::L1 | Norm::L2)
                | (Activation::IdAbs, Norm::Inf)
                | (Activation::Tanh3, Norm::L2)
                | (Activation::TanhPair, Norm::L1)
        )
    }

    /// Positively 1-homogeneous activations, for which diagonal rescaling
    /// between layers leaves the network function unchanged.
    pub fn is_positively_homogeneous(self) -> bool {
        matches!(
            self,
            Activation::Abs | Activation::Relu | Activation::CRelu | Activation::IdAbs
        )
    }

    /// Maximum saturation defect over `sample_count` points in `[−20, 20]`:
    /// half on a midpoint grid, half uniform random with a fixed seed.
    pub fn check_saturation(self, p: Norm, sample_count: usize) -> f64 {
        assert!(sample_count >= 1);
        let grid = sample_count.div_ceil(2);
        let random = sample_count - grid;
        let step = 40.0 / grid as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5A7);
        let xs = (0..grid)
            .map(|i| -20.0 + (i as f64 + 0.5) * step)
            .chain((0..random).map(|_| rng.gen_range(-20.0..20.0)));
        let mut worst: f64 = 0.0;
        for x in xs {
            let ds = (0..self.order()).map(|k| self.component_derivative(k, x).abs());
            let dev = match p {
                Norm::Inf => ds.map(|d| (d - 1.0).abs()).fold(0.0, f64::max),
                Norm::L1 => (ds.sum::<f64>() - 1.0).abs(),
                Norm::L2 => (ds.map(|d| d * d).sum::<f64>() - 1.0).abs(),
            };
            worst = worst.max(dev);
        }
        worst
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activation::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownActivation(s.to_string()))
    }
}

/// Lipschitz constant looked up by registry id.
pub fn lipschitz_constant(id: &str, p: Norm) -> crate::Result<f64> {
    Ok(id.parse::<Activation>()?.lipschitz_constant(p))
}

#[inline]
fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

// |x| + log((1 + e^{−2|x|})/2), finite for every finite x
#[inline]
fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}
