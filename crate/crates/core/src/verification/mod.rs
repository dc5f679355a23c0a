//! Lipschitz upper bounds, theoretical and empirical lower bounds, and
//! weight-spectrum diagnostics.

mod lbfgs;

pub use lbfgs::{minimize, LbfgsOptions, LbfgsResult};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, full_svd, numerical_rank, singular_values, Matrix, Norm};
use crate::network::Network;

/// Denominator offset in the secant slope.
pub const SECANT_EPS: f64 = 1e-8;

// every sign/phase pattern of Wx must be reachable: full row rank
fn check_full_rank(w: &Matrix) -> Result<()> {
    let rank = numerical_rank(w);
    if rank < w.rows() {
        return Err(Error::RankDeficient(format!("rank {rank} < {} for {:?}", w.rows(), w.shape())));
    }
    Ok(())
}

// λ_max(Σᵢ Mᵢ D Mᵢᵀ) with D = Diag(WWᵀ)
fn lambda_max_weighted(blocks: &[&Matrix], w: &Matrix) -> Result<f64> {
    let d: Vec<f64> = (0..w.rows()).map(|i| w.row(i).iter().map(|x| x * x).sum()).collect();
    let n = blocks[0].rows();
    let mut s = Matrix::zeros(n, n);
    for m in blocks {
        if m.cols() != w.rows() || m.rows() != n {
            return Err(Error::Dimension(format!("readout {:?} vs hidden width {}", m.shape(), w.rows())));
        }
        s.add_scaled_mut(1.0, &m.scale_columns(&d).matmul_tr(m));
    }
    Ok(full_svd(&s).s.first().copied().unwrap_or(0.0))
}

/// `√(½ λ_max(A D Aᵀ + B D Bᵀ))`, `D = Diag(WWᵀ)`, for `x ↦ A cos(Wx) + B sin(Wx)`.
pub fn theory_lower_sincos(a: &Matrix, b: &Matrix, w: &Matrix) -> Result<f64> {
    check_full_rank(w)?;
    Ok((0.5 * lambda_max_weighted(&[a, b], w)?).sqrt())
}

/// `√(λ_max(A D Aᵀ))`, `D = Diag(WWᵀ)`, for `x ↦ A|Wx + b|`.
pub fn theory_lower_abs(a: &Matrix, w: &Matrix) -> Result<f64> {
    check_full_rank(w)?;
    Ok(lambda_max_weighted(&[a], w)?.sqrt())
}

/// Theoretical lower bound for single-hidden-layer sincos or abs networks.
pub fn theory_lower(net: &Network) -> Option<Result<f64>> {
    let layers = net.layers();
    if layers.len() != 2 {
        return None;
    }
    let (w, readout) = (&layers[0].weight, &layers[1].weight);
    match layers[0].activation? {
        Activation::SinCos => {
            let h = w.rows();
            Some(theory_lower_sincos(&readout.col_block(0, h), &readout.col_block(h, h), w))
        }
        Activation::Abs => Some(theory_lower_abs(readout, w)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub memory: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { restarts: 20, max_iters: 500, memory: 10, seed: 0 }
    }
}

/// Best secant slope found and the pair attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecantWitness {
    pub value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// `‖f(x) − f(y)‖₂ / (‖x − y‖₂ + ε)`.
pub fn secant_slope(net: &Network, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = net.forward(x)?;
    let fy = net.forward(y)?;
    let num: f64 = fx.iter().zip(&fy).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(num / (den + SECANT_EPS))
}

struct NegSlope<'a> {
    net: &'a Network,
    n: usize,
}

impl NegSlope<'_> {
    fn value_and_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n;
        let pair = Matrix::new(2, n, z.to_vec()).expect("2n parameters");
        let trace = self.net.trace(&pair);
        let out = trace.output();
        let d: Vec<f64> = out.row(0).iter().zip(out.row(1)).map(|(a, b)| a - b).collect();
        let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let delta: Vec<f64> = z[..n].iter().zip(&z[n..]).map(|(a, b)| a - b).collect();
        let dn = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let q = dn + SECANT_EPS;
        let slope = r / q;
        let mut grad = vec![0.0; 2 * n];
        if r > 0.0 {
            let mut g_out = Matrix::zeros(2, d.len());
            for (k, &dk) in d.iter().enumerate() {
                g_out.set(0, k, dk / (r * q));
                g_out.set(1, k, -dk / (r * q));
            }
            let (_, gin) = self.net.backward(&trace, &g_out, false, true);
            grad.copy_from_slice(gin.expect("input gradient").as_slice());
        }
        if dn > 0.0 {
            let c = slope / (q * dn);
            for i in 0..n {
                grad[i] -= c * delta[i];
                grad[n + i] += c * delta[i];
            }
        }
        (-slope, grad.into_iter().map(|g| -g).collect())
    }
}

fn local_search(net: &Network, z0: Vec<f64>, opts: &SearchOptions) -> Vec<f64> {
    let problem = NegSlope { net, n: net.input_dim() };
    let lopts = LbfgsOptions { memory: opts.memory, max_iters: opts.max_iters, ..Default::default() };
    minimize(|z| problem.value_and_grad(z), z0, &lopts).x
}

/// Maximize the secant slope by L-BFGS over pairs `(x, y)` started at
/// random pairs of rows of `points`. The result never exceeds the 2-norm
/// trivial bound (checked).
pub fn empirical_lower_bound(net: &Network, points: &Matrix, opts: &SearchOptions) -> Result<SecantWitness> {
    if points.rows() == 0 {
        return Err(Error::InvalidArgument("no points to start from".into()));
    }
    if points.cols() != net.input_dim() {
        return Err(Error::Dimension(format!("points have width {}", points.cols())));
    }
    let n = net.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = SecantWitness { value: f64::NEG_INFINITY, x: vec![], y: vec![] };
    for _ in 0..opts.restarts.max(1) {
        let i = rng.gen_range(0..points.rows());
        let mut j = rng.gen_range(0..points.rows());
        if points.rows() > 1 {
            while j == i {
                j = rng.gen_range(0..points.rows());
            }
        }
        let mut z0 = points.row(i).to_vec();
        z0.extend_from_slice(points.row(j));
        if i == j {
            // single point: separate the pair slightly
            z0[n] += 1e-3;
        }
        for z in [z0.clone(), local_search(net, z0, opts)] {
            if z.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let value = secant_slope(net, &z[..n], &z[n..])?;
            if value > best.value {
                best = SecantWitness { value, x: z[..n].to_vec(), y: z[n..].to_vec() };
            }
        }
    }
    let k = net.trivial_bound(Norm::L2);
    if best.value > k * (1.0 + 1e-6) {
        return Err(Error::BoundViolation(format!("secant slope {} exceeds trivial bound {k}", best.value)));
    }
    Ok(best)
}

/// Normalized spectra: singular values over `σ_max` (p = 2), row 1-norms
/// over their max (p = ∞), column 1-norms over their max (p = 1).
pub fn spectrum_histogram(net: &Network, p: Norm) -> Vec<Vec<f64>> {
    net.layers()
        .iter()
        .map(|l| {
            let raw = match p {
                Norm::L2 => singular_values(&l.weight),
                Norm::Inf => l.weight.row_abs_sums(),
                Norm::L1 => l.weight.column_abs_sums(),
            };
            let max = raw.iter().cloned().fold(0.0, f64::max);
            raw.iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect()
        })
        .collect()
}

pub fn spectrum_csv(spectra: &[Vec<f64>]) -> String {
    let mut s = String::from("matrix_index,value\n");
    for (i, vals) in spectra.iter().enumerate() {
        for v in vals {
            let _ = writeln!(s, "{i},{v}");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// 2-norm trivial bound.
    #[serde(rename = "K_upper")]
    pub k_upper: f64,
    /// Trivial bound in the network's own norm.
    #[serde(rename = "K_p")]
    pub k_p: f64,
    pub theory_lower: Option<f64>,
    pub empirical_lower: f64,
    pub tightness: f64,
    pub norm_p: Norm,
    pub layer_norms: Vec<f64>,
    pub condition_numbers: Vec<Option<f64>>,
    pub spectrum: Vec<Vec<f64>>,
    pub witness: SecantWitness,
    pub search: SearchOptions,
    pub line_search: String,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// Upper bound, lower bounds and diagnostics for `net`, searching from the
/// rows of `points`.
pub fn verify(net: &Network, points: &Matrix, opts: &SearchOptions) -> Result<VerificationReport> {
    let p = net.norm_p();
    let k_upper = net.trivial_bound(Norm::L2);
    let witness = empirical_lower_bound(net, points, opts)?;
    let theory_lower = theory_lower(net).and_then(|r| r.ok());
    Ok(VerificationReport {
        k_upper,
        k_p: net.trivial_bound(p),
        theory_lower,
        empirical_lower: witness.value,
        tightness: k_upper / witness.value,
        norm_p: p,
        layer_norms: net.layer_norms(p),
        condition_numbers: net.layers().iter().map(|l| condition_number(&l.weight).ok()).collect(),
        spectrum: spectrum_histogram(net, p),
        witness,
        search: *opts,
        line_search: "strong Wolfe bracketing/zoom (c1 = 1e-4, c2 = 0.9, ≤ 30 evaluations)".into(),
    })
}
