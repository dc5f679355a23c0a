//! First-order optimizers over a flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerConfig {
    /// COCOB-Backprop coin betting.
    Cocob { alpha: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::cocob()
    }
}

impl OptimizerConfig {
    pub fn cocob() -> Self {
        Self::Cocob { alpha: 100.0 }
    }

    pub fn adam() -> Self {
        Self::Adam { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Cocob { alpha } => alpha > 0.0 && alpha.is_finite(),
            Self::Adam { lr, beta1, beta2, eps } => {
                lr > 0.0 && (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }

    pub fn build(&self, params: &[f64]) -> Optimizer {
        match *self {
            Self::Cocob { alpha } => Optimizer::Cocob(Cocob::new(params, alpha)),
            Self::Adam { lr, beta1, beta2, eps } => Optimizer::Adam(Adam::new(params.len(), lr, beta1, beta2, eps)),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Cocob(Cocob),
    Adam(Adam),
}

impl Optimizer {
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        match self {
            Self::Cocob(o) => o.step(params, grads),
            Self::Adam(o) => o.step(params, grads),
        }
    }
}

const COCOB_EPS: f64 = 1e-8;

/// Per-coordinate state: initial point, max |g|, Σ|g|, reward, −Σg.
#[derive(Debug, Clone)]
pub struct Cocob {
    alpha: f64,
    init: Vec<f64>,
    max_grad: Vec<f64>,
    abs_sum: Vec<f64>,
    reward: Vec<f64>,
    neg_sum: Vec<f64>,
}

impl Cocob {
    pub fn new(params: &[f64], alpha: f64) -> Self {
        let n = params.len();
        Self {
            alpha,
            init: params.to_vec(),
            max_grad: vec![COCOB_EPS; n],
            abs_sum: vec![0.0; n],
            reward: vec![0.0; n],
            neg_sum: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        for i in 0..params.len() {
            let g = grads[i];
            let w1 = self.init[i];
            let l = self.max_grad[i].max(g.abs());
            self.max_grad[i] = l;
            self.abs_sum[i] += g.abs();
            self.reward[i] = (self.reward[i] - g * (params[i] - w1)).max(0.0);
            self.neg_sum[i] -= g;
            let denom = l * (self.abs_sum[i] + l).max(self.alpha * l);
            params[i] = w1 + self.neg_sum[i] / denom * (l + self.reward[i]);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { lr, beta1, beta2, eps, t: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
