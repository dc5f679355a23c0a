//! Dense linear algebra: matrices, induced norms, SVD, condition numbers.

mod matrix;
mod norms;
pub mod random;
mod solve;
mod svd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use matrix::{axpy, dot, norm2, normalize, vec_norm, Matrix};
pub(crate) use matrix::{gemm, MatRef};
pub use norms::{
    condition_number, default_start, induced_norm, max_sum_subgradient, numerical_rank,
    power_iteration, spectral_norm_subgradient, SpectralTriple, POWER_MAX_ITER, POWER_REL_TOL,
};
pub use solve::{inverse, solve_least_squares};
pub use svd::{full_svd, singular_values, Svd};

use crate::error::Error;

/// Which `ℓᵖ` norm: 1, 2 or ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Inf];

    /// The exponent `p` (`f64::INFINITY` for ∞).
    pub fn exponent(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::Inf => f64::INFINITY,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Inf => "inf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(Norm::L1),
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "infinity" | "linf" | "∞" => Ok(Norm::Inf),
            other => Err(Error::InvalidArgument(format!("unknown norm `{other}`"))),
        }
    }
}

// 1 and 2 serialize as JSON numbers, ∞ as the string "inf".
impl Serialize for Norm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Norm::L1 => s.serialize_u8(1),
            Norm::L2 => s.serialize_u8(2),
            Norm::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Norm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        let s = match &v {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            _ => return Err(serde::de::Error::custom("norm must be 1, 2 or \"inf\"")),
        };
        let s = s.strip_suffix(".0").unwrap_or(&s).to_string();
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
pub(crate) mod testing {
    pub use super::random::{gaussian_matrix, orthogonal_matrix};
    use super::Matrix;

    /// Determinant by partial-pivot elimination; test oracle only.
    pub fn determinant(m: &Matrix) -> f64 {
        let n = m.rows();
        let mut a = m.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a.get(i, k).abs().partial_cmp(&a.get(j, k).abs()).unwrap())
                .unwrap();
            if a.get(p, k) == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    let t = a.get(k, j);
                    a.set(k, j, a.get(p, j));
                    a.set(p, j, t);
                }
                det = -det;
            }
            det *= a.get(k, k);
            for i in k + 1..n {
                let f = a.get(i, k) / a.get(k, k);
                for j in k..n {
                    a.set(i, j, a.get(i, j) - f * a.get(k, j));
                }
            }
        }
        det
    }
}
