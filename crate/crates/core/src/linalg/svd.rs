//! One-sided (Hestenes) Jacobi SVD.
//!
//! Accurate to a few ulps relative to `σ_max` for the desk-scale matrices this
//! crate handles; the work is `O(sweeps · n² · m)` with `n = min(rows, cols)`.

use super::matrix::{dot, Matrix};

/// Thin SVD `M = U diag(s) Vᵀ`; `s` sorted descending, `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k`, orthonormal columns (zero columns where `s` is zero).
    pub u: Matrix,
    pub s: Vec<f64>,
    /// `cols x k`, orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        self.u.scale_columns(&self.s).matmul_tr(&self.v)
    }
}

const MAX_SWEEPS: usize = 80;

/// Full (thin) SVD by one-sided Jacobi rotations.
///
/// # Panics
/// Panics if `min(rows, cols) > 4096`.
pub fn full_svd(m: &Matrix) -> Svd {
    let (rows, cols) = m.shape();
    assert!(rows.min(cols) <= 4096, "full_svd is limited to min dimension 4096");
    if rows < cols {
        let t = jacobi_tall(&m.transpose());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    jacobi_tall(m)
}

/// Singular values only, descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    full_svd(m).s
}

fn jacobi_tall(m: &Matrix) -> Svd {
    let (rows, n) = m.shape();
    // columns of A stored contiguously: a[j] is column j
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let mut norms: Vec<f64> = a.iter().map(|c| dot(c, c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&a[p], &a[q]);
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                norms[p] = dot(&a[p], &a[p]);
                norms[q] = dot(&a[q], &a[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).unwrap().then(i.cmp(&j)));

    let mut u = Matrix::zeros(rows, n);
    let mut vm = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sj = sig[j];
        s.push(sj);
        if sj > 0.0 {
            for i in 0..rows {
                u.set(i, k, a[j][i] / sj);
            }
        }
        for i in 0..n {
            vm.set(i, k, v[j][i]);
        }
    }
    Svd { u, s, v: vm }
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::{gaussian_matrix, orthogonal_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_has_unit_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = orthogonal_matrix(5, &mut rng);
        for s in singular_values(&q) {
            assert!((s - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn diag_with_zero() {
        let m = Matrix::from_diag(&[2.0, 0.0]);
        assert_eq!(singular_values(&m), vec![2.0, 0.0]);
    }

    #[test]
    fn reconstruction_wide_and_tall() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(r, c) in &[(6, 3), (3, 6), (7, 7), (1, 5), (5, 1)] {
            let m = gaussian_matrix(r, c, &mut rng);
            let svd = full_svd(&m);
            let err = svd.reconstruct().sub(&m).frobenius_norm();
            assert!(err <= 1e-10 * m.frobenius_norm(), "{r}x{c}: {err}");
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn product_of_values_matches_gram_determinant() {
        // det(MᵀM) by Gaussian elimination, independent of the SVD path
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = gaussian_matrix(6, 3, &mut rng);
        let g = m.tr_matmul(&m);
        let det = crate::linalg::testing::determinant(&g);
        let prod: f64 = singular_values(&m).iter().product();
        assert!((prod - det.sqrt()).abs() <= 1e-8 * prod);
    }
}
