//! Seeded random matrices for fixtures, examples and tests.

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{dot, normalize, Matrix};

/// Entries i.i.d. standard normal.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-ish random orthogonal matrix via Gram–Schmidt on a Gaussian matrix.
pub fn orthogonal_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    loop {
        let g = gaussian_matrix(n, n, rng);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut c = g.col(j);
            // two passes of classical Gram-Schmidt for orthogonality to ~ulp
            for _ in 0..2 {
                for b in &basis {
                    let proj = dot(&c, b);
                    c.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
                }
            }
            if normalize(&mut c) < 1e-8 {
                ok = false;
                break;
            }
            basis.push(c);
        }
        if ok {
            return Matrix::from_fn(n, n, |i, j| basis[j][i]);
        }
    }
}
