use super::matrix::Matrix;
use super::svd::full_svd;
use crate::error::{Error, Result};

/// Inverse by Gauss–Jordan elimination with partial pivoting.
///
/// Returns [`Error::Singular`] when a pivot falls below `1e-14` times the
/// largest absolute entry.
pub fn inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::Dimension(format!("inverse of non-square {}x{}", n, m.cols())));
    }
    let scale = m.as_slice().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Singular);
    }
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a.get(i, k).abs() > a.get(p, k).abs() {
                p = i;
            }
        }
        let piv = a.get(p, k);
        if piv.abs() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if p != k {
            swap_rows(&mut a, p, k);
            swap_rows(&mut inv, p, k);
        }
        let r = 1.0 / piv;
        a.row_mut(k).iter_mut().for_each(|x| *x *= r);
        inv.row_mut(k).iter_mut().for_each(|x| *x *= r);
        let ak = a.row(k).to_vec();
        let ik = inv.row(k).to_vec();
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = a.get(i, k);
            if f != 0.0 {
                a.row_mut(i).iter_mut().zip(&ak).for_each(|(x, y)| *x -= f * y);
                inv.row_mut(i).iter_mut().zip(&ik).for_each(|(x, y)| *x -= f * y);
            }
        }
    }
    Ok(inv)
}

fn swap_rows(m: &mut Matrix, i: usize, j: usize) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    for c in 0..cols {
        data.swap(i * cols + c, j * cols + c);
    }
}

/// Minimum-norm least-squares solution of `M x = b` via the SVD.
pub fn solve_least_squares(m: &Matrix, b: &[f64]) -> Vec<f64> {
    assert_eq!(b.len(), m.rows());
    let svd = full_svd(m);
    let thresh = svd.s[0] * 1e-12 * m.rows().max(m.cols()) as f64;
    let utb = svd.u.tr_matvec(b);
    let coeffs: Vec<f64> = utb
        .iter()
        .zip(&svd.s)
        .map(|(c, &s)| if s > thresh { c / s } else { 0.0 })
        .collect();
    svd.v.matvec(&coeffs)
}
