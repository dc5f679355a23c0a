//! ℓ2 PGD attacks and margin-based certification.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Norm};
use crate::network::Network;
use crate::training::{argmax, batch_cross_entropy, cross_entropy, margin};

pub const PGD_STEPS: usize = 40;
/// Budgets `2⁻¹ … 2⁻⁵`.
pub const DEFAULT_EPSILONS: [f64; 5] = [0.5, 0.25, 0.125, 0.0625, 0.03125];
const CHUNK: usize = 1000;

/// PGD on every row of `x` at once; each row keeps its highest-loss iterate.
pub fn pgd_l2_batch(net: &Network, x: &Matrix, labels: &[usize], epsilon: f64, steps: usize) -> Result<Matrix> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be > 0")));
    }
    if x.rows() != labels.len() || x.cols() != net.input_dim() {
        return Err(Error::Dimension(format!("batch {:?} with {} labels", x.shape(), labels.len())));
    }
    let row_losses = |logits: &Matrix| -> Vec<f64> {
        labels.iter().enumerate().map(|(r, &y)| cross_entropy(logits.row(r), y).0).collect()
    };
    let step = epsilon / 10.0;
    let mut cur = x.clone();
    let mut best = x.clone();
    let mut best_loss = row_losses(&net.forward_batch(x));
    for _ in 0..steps {
        let trace = net.trace(&cur);
        let (_, g_out) = batch_cross_entropy(trace.output(), labels);
        let (_, g_in) = net.backward(&trace, &g_out, false, true);
        let g = g_in.expect("input gradient");
        for r in 0..cur.rows() {
            let gr = g.row(r);
            let gn = gr.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(gn > 0.0) || !gn.is_finite() {
                continue;
            }
            let x0 = x.row(r);
            let row = cur.row_mut(r);
            for (c, gv) in row.iter_mut().zip(gr) {
                *c += step * gv / gn;
            }
            let dn = row.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dn > epsilon {
                let s = epsilon / dn;
                for (c, b) in row.iter_mut().zip(x0) {
                    *c = b + (*c - b) * s;
                }
            }
        }
        let losses = row_losses(&net.forward_batch(&cur));
        for (r, l) in losses.into_iter().enumerate() {
            if l > best_loss[r] {
                best_loss[r] = l;
                best.row_mut(r).copy_from_slice(cur.row(r));
            }
        }
    }
    Ok(best)
}

/// 40 normalized-gradient ascent steps of length `ε/10` on the cross-entropy,
/// each projected onto the `ε`-ball around `x`, starting from `x`.
pub fn pgd_l2(net: &Network, x: &[f64], label: usize, epsilon: f64) -> Result<Vec<f64>> {
    Ok(pgd_l2_batch(net, &Matrix::row_vector(x), &[label], epsilon, PGD_STEPS)?.into_vec())
}

/// Percent of points misclassified at the clean input or after PGD.
pub fn empirical_error(net: &Network, ds: &Dataset, epsilon: f64) -> Result<f64> {
    let mut wrong = 0usize;
    let idx: Vec<usize> = (0..ds.len()).collect();
    for chunk in idx.chunks(CHUNK) {
        let (x, y) = ds.gather(chunk);
        let clean = net.forward_batch(&x);
        let adv = net.forward_batch(&pgd_l2_batch(net, &x, &y, epsilon, PGD_STEPS)?);
        wrong += y
            .iter()
            .enumerate()
            .filter(|&(r, &c)| argmax(clean.row(r)) != c || argmax(adv.row(r)) != c)
            .count();
    }
    Ok(100.0 * wrong as f64 / ds.len() as f64)
}

/// Logit margins `f_y − max_{j≠y} f_j` for every point.
pub fn margins(net: &Network, ds: &Dataset) -> Vec<f64> {
    let idx: Vec<usize> = (0..ds.len()).collect();
    let mut out = Vec::with_capacity(ds.len());
    for chunk in idx.chunks(CHUNK) {
        let (x, y) = ds.gather(chunk);
        let logits = net.forward_batch(&x);
        out.extend(y.iter().enumerate().map(|(r, &c)| margin(logits.row(r), c)));
    }
    out
}

/// A point is certified at `ε` when its margin exceeds `√2·K·ε`; a point
/// with non-positive margin is never certified.
pub fn is_certified(margin: f64, k2: f64, epsilon: f64) -> bool {
    margin > 0.0 && margin > std::f64::consts::SQRT_2 * k2 * epsilon
}

pub fn certified_error_from_margins(margins: &[f64], k2: f64, epsilon: f64) -> f64 {
    let ok = margins.iter().filter(|&&m| is_certified(m, k2, epsilon)).count();
    100.0 - 100.0 * ok as f64 / margins.len() as f64
}

/// Certified error (%) using the 2-norm trivial bound.
pub fn certified_error(net: &Network, ds: &Dataset, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be ≥ 0")));
    }
    Ok(certified_error_from_margins(&margins(net, ds), net.trivial_bound(Norm::L2), epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub clean_error_pct: f64,
    pub k2: f64,
    pub epsilons: Vec<f64>,
    pub empirical_error_pct: Vec<f64>,
    pub certified_error_pct: Vec<f64>,
}

impl AttackReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,empirical_error_pct,certified_error_pct\n");
        for ((e, a), c) in self.epsilons.iter().zip(&self.empirical_error_pct).zip(&self.certified_error_pct) {
            let _ = writeln!(s, "{e},{a},{c}");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub fn attack_sweep(net: &Network, ds: &Dataset, epsilons: &[f64]) -> Result<AttackReport> {
    let m = margins(net, ds);
    let k2 = net.trivial_bound(Norm::L2);
    let clean = 100.0 * m.iter().filter(|&&v| v <= 0.0).count() as f64 / m.len() as f64;
    let mut report = AttackReport {
        clean_error_pct: clean,
        k2,
        epsilons: epsilons.to_vec(),
        empirical_error_pct: Vec::new(),
        certified_error_pct: Vec::new(),
    };
    for &eps in epsilons {
        report.empirical_error_pct.push(empirical_error(net, ds, eps)?);
        report.certified_error_pct.push(certified_error_from_margins(&m, k2, eps));
    }
    Ok(report)
}
