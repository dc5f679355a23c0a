//! Softmax cross-entropy.

use crate::linalg::Matrix;

/// Loss `−log softmax(logits)[label]` and its gradient `softmax − e_label`.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    assert!(label < logits.len(), "label {label} out of range");
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut grad: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = grad.iter().sum();
    grad.iter_mut().for_each(|g| *g /= sum);
    let loss = max + sum.ln() - logits[label];
    grad[label] -= 1.0;
    (loss, grad)
}

/// Mean cross-entropy over the rows of `logits` and the gradient of the mean.
pub fn batch_cross_entropy(logits: &Matrix, labels: &[usize]) -> (f64, Matrix) {
    assert_eq!(logits.rows(), labels.len());
    let n = labels.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut total = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let (l, g) = cross_entropy(logits.row(r), y);
        total += l;
        grad.row_mut(r).iter_mut().zip(g).for_each(|(d, s)| *d = s / n);
    }
    (total / n, grad)
}

/// Index of the largest logit (lowest index on ties).
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `f_y − max_{j≠y} f_j`.
pub fn margin(logits: &[f64], label: usize) -> f64 {
    let other = logits
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    logits[label] - other
}
