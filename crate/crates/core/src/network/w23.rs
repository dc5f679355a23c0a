//! Rational parameterization of the spectral-norm ball:
//! `Z = X − Xᵀ + YᵀY`, `W = 4(I+Z)⁻¹(I−Z)(I+Z)⁻ᵀYᵀ`.

use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix};

struct Parts {
    q: Matrix,
    m: Matrix,
}

// With Q = (I+Z)⁻¹ and I − Z = 2I − (I+Z): M = 2QQᵀ − Qᵀ.
fn parts(x: &Matrix, y: &Matrix) -> Result<Parts> {
    let n = x.rows();
    if x.cols() != n {
        return Err(Error::Dimension(format!("X must be square, got {:?}", x.shape())));
    }
    if y.cols() != n {
        return Err(Error::Dimension(format!(
            "Y must have {n} columns, got {:?}",
            y.shape()
        )));
    }
    let z = x.sub(&x.transpose()).add(&y.tr_matmul(y));
    let p = Matrix::identity(n).add(&z);
    let q = inverse(&p).map_err(|_| Error::SingularParameterization)?;
    let m = q.matmul_tr(&q).scaled(2.0).sub(&q.transpose());
    Ok(Parts { q, m })
}

/// `W = 4(I+Z)⁻¹(I−Z)(I+Z)⁻ᵀYᵀ` for `X ∈ ℝ^{n×n}`, `Y ∈ ℝ^{m×n}`; `W` is `n×m`.
pub fn w23_parameterize(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    let Parts { m, .. } = parts(x, y)?;
    Ok(m.matmul_tr(y).scaled(4.0))
}

/// Pull `G = ∂L/∂W` back to `(∂L/∂X, ∂L/∂Y)`.
pub fn w23_backward(x: &Matrix, y: &Matrix, g: &Matrix) -> Result<(Matrix, Matrix)> {
    let Parts { q, m } = parts(x, y)?;
    if g.shape() != (x.rows(), y.rows()) {
        return Err(Error::Dimension(format!("gradient has shape {:?}", g.shape())));
    }
    // W = 4 M Yᵀ
    let h = g.matmul(y).scaled(4.0);
    let mut gy = g.tr_matmul(&m).scaled(4.0);
    // M = 2QQᵀ − Qᵀ  ⇒  ∂L/∂Q = 2HQ + 2HᵀQ − Hᵀ
    let ht = h.transpose();
    let gq = h.add(&ht).matmul(&q).scaled(2.0).sub(&ht);
    // Q = P⁻¹  ⇒  ∂L/∂P = −Qᵀ (∂L/∂Q) Qᵀ, and ∂Z = ∂P
    let gz = q.tr_matmul(&gq).matmul_tr(&q).scaled(-1.0);
    let gzt = gz.transpose();
    let gx = gz.sub(&gzt);
    gy.add_scaled_mut(1.0, &y.matmul(&gz.add(&gzt)));
    Ok((gx, gy))
}
