//! Hand-built networks whose Lipschitz constants are known in closed form.

use rand::Rng;

use super::{absorb_bias, Layer, Network};
use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::random::orthogonal_matrix;
use crate::linalg::{solve_least_squares, Matrix, Norm};

/// Two biasings of the same one-hidden-layer unit `ℝ → ℝ`.
///
/// `loose` has a true Lipschitz constant far below the shared trivial bound;
/// `tight` has the same weights with a bias that makes the bound (nearly)
/// attained.
#[derive(Debug, Clone)]
pub struct BiasFixture {
    pub loose: Network,
    pub tight: Network,
    pub trivial_bound: f64,
    pub loose_constant: f64,
    pub tight_constant: f64,
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("fixture width d = {d} must be ≥ 2")));
    }
    Ok(())
}

fn one_hidden(w0: Matrix, act: Activation, b: Option<Vec<f64>>, w1: Matrix) -> Result<Network> {
    Network::new(1, vec![Layer::new(w0, Some(act), b), Layer::linear(w1)], Norm::L2)
}

/// `x ↦ Σᵢ (−1)ⁱ ReLU(x + bᵢ)`: `b = (1, 2, …, d)` gives constant 1,
/// `b′ = (1, −1, 1, …)` gives `⌈d/2⌉`; the trivial 2-norm bound is `d`.
pub fn counterexample_relu(d: usize) -> Result<BiasFixture> {
    check_d(d)?;
    let w0 = Matrix::from_fn(d, 1, |_, _| 1.0);
    let w1 = Matrix::from_fn(1, d, |_, j| if (j + 1) % 2 == 0 { 1.0 } else { -1.0 });
    let loose_b: Vec<f64> = (1..=d).map(|i| i as f64).collect();
    let tight_b: Vec<f64> = (1..=d).map(|i| if i % 2 == 1 { 1.0 } else { -1.0 }).collect();
    Ok(BiasFixture {
        loose: one_hidden(w0.clone(), Activation::Relu, Some(loose_b), w1.clone())?,
        tight: one_hidden(w0, Activation::Relu, Some(tight_b), w1)?,
        trivial_bound: d as f64,
        loose_constant: 1.0,
        tight_constant: d.div_ceil(2) as f64,
    })
}

/// `x ↦ Σᵢ tanh(x + bᵢ)`: `b = 0` attains the trivial bound `d`, while
/// `b = (1, 2, …, d)` spreads the slopes so the constant is
/// `sup_x Σᵢ sech²(x + i) = O(1)`.
pub fn counterexample_tanh(d: usize) -> Result<BiasFixture> {
    check_d(d)?;
    let w0 = Matrix::from_fn(d, 1, |_, _| 1.0);
    let w1 = Matrix::from_fn(1, d, |_, _| 1.0);
    let loose_b: Vec<f64> = (1..=d).map(|i| i as f64).collect();
    let loose_constant = sup_shifted_sech2(&loose_b);
    Ok(BiasFixture {
        loose: one_hidden(w0.clone(), Activation::Tanh, Some(loose_b), w1.clone())?,
        tight: one_hidden(w0, Activation::Tanh, Some(vec![0.0; d]), w1)?,
        trivial_bound: d as f64,
        loose_constant,
        tight_constant: d as f64,
    })
}

fn sup_shifted_sech2(b: &[f64]) -> f64 {
    let slope = |x: f64| {
        b.iter()
            .map(|bi| {
                let c = (x + bi).cosh();
                1.0 / (c * c)
            })
            .sum::<f64>()
    };
    let lo = -b.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 3.0;
    let hi = -b.iter().cloned().fold(f64::INFINITY, f64::min) + 3.0;
    let n = ((hi - lo) / 1e-3).ceil() as usize;
    let (mut best_x, mut best) = (lo, slope(lo));
    for i in 1..=n {
        let x = lo + i as f64 * 1e-3;
        let v = slope(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    // golden-section polish inside the winning cell
    let (mut a, mut c) = (best_x - 1e-3, best_x + 1e-3);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let x1 = c - g * (c - a);
        let x2 = a + g * (c - a);
        if slope(x1) < slope(x2) {
            a = x1;
        } else {
            c = x2;
        }
    }
    best.max(slope(0.5 * (a + c)))
}

/// `x ↦ Σᵢ₌₁²ᵈ sin(x + bᵢ)` as a sincos unit with absorbed bias.
/// `b = 0` attains the trivial bound `2d`; `bᵢ = iπ` cancels pairwise to
/// the zero function.
pub fn counterexample_sin(d: usize) -> Result<BiasFixture> {
    check_d(d)?;
    let width = 2 * d;
    let w0 = Matrix::from_fn(width, 1, |_, _| 1.0);
    let a = Matrix::zeros(1, width);
    let b = Matrix::from_fn(1, width, |_, _| 1.0);
    let phases: Vec<f64> = (1..=width).map(|i| i as f64 * std::f64::consts::PI).collect();
    let (a2, b2) = absorb_bias(&a, &b, &phases)?;
    Ok(BiasFixture {
        loose: one_hidden(w0.clone(), Activation::SinCos, None, a2.hstack(&b2))?,
        tight: one_hidden(w0, Activation::SinCos, None, a.hstack(&b))?,
        trivial_bound: width as f64,
        loose_constant: 0.0,
        tight_constant: width as f64,
    })
}

/// Linear network `W_L ⋯ W₁ = I` from scaled orthogonal factors, so every
/// factor has condition number 1 and the trivial 2-norm bound equals 1.
pub fn orthogonal_factorization<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Network {
    assert!(depth >= 1);
    let mut layers = Vec::with_capacity(depth);
    let mut prev_q = Matrix::identity(n);
    let mut scale_product = 1.0;
    for i in 0..depth {
        let w = if i + 1 == depth {
            prev_q.transpose().scaled(1.0 / scale_product)
        } else {
            let q = orthogonal_matrix(n, rng);
            let c = rng.gen_range(0.25..4.0);
            scale_product *= c;
            let w = q.matmul_tr(&prev_q).scaled(c);
            prev_q = q;
            w
        };
        layers.push(Layer::linear(w));
    }
    Network::new(n, layers, Norm::L2).expect("square factors chain")
}

/// ASL unit `x ↦ σ(Wx + b)` (a hidden layer followed by the identity readout).
pub fn asl_unit(w: Matrix, b: Vec<f64>, act: Activation) -> Result<Network> {
    let out = w.rows() * act.order();
    let input = w.cols();
    Network::new(
        input,
        vec![Layer::new(w, Some(act), Some(b)), Layer::linear(Matrix::identity(out))],
        Norm::L2,
    )
}

/// Least-squares preimage `x₀` with `W x₀ + b = z₀·𝟙`, where the slope of a
/// monotone activation peaks at `z₀`.
pub fn asl_steepest_point(w: &Matrix, b: &[f64], z0: f64) -> Vec<f64> {
    let rhs: Vec<f64> = b.iter().map(|bi| z0 - bi).collect();
    solve_least_squares(w, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::gaussian_matrix;
    use crate::linalg::{condition_number, induced_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // |f′| on a dense 1-D grid, an oracle for the true constant of ℝ → ℝ maps
    fn grid_slope(net: &Network, lo: f64, hi: f64) -> f64 {
        let n = 200_000;
        let mut best: f64 = 0.0;
        for i in 0..n {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            best = best.max(net.jacobian(&[x]).unwrap().get(0, 0).abs());
        }
        best
    }

    #[test]
    fn relu_fixture_values() {
        let f = counterexample_relu(25).unwrap();
        assert_eq!(f.loose.trivial_bound(Norm::L2), 25.0);
        assert!((f.tight.trivial_bound(Norm::L2) - 25.0).abs() < 1e-12);
        assert_eq!(grid_slope(&f.loose, -30.0, 5.0), 1.0);
        assert_eq!(grid_slope(&f.tight, -3.0, 3.0), 13.0);
        assert!(counterexample_relu(1).is_err());
    }

    #[test]
    fn tanh_fixture_values() {
        let f = counterexample_tanh(50).unwrap();
        let j0 = f.tight.jacobian(&[0.0]).unwrap().get(0, 0);
        assert!(j0.abs() >= 0.8 * 50.0);
        assert!((f.tight.trivial_bound(Norm::L2) - 50.0).abs() < 1e-9);
        let grid = grid_slope(&f.loose, -55.0, 3.0);
        assert!(grid <= f.loose_constant + 1e-12 && grid >= f.loose_constant - 1e-6);
        assert!(f.loose_constant < 3.0);
    }

    #[test]
    fn sin_fixture_is_constant_zero() {
        let f = counterexample_sin(10).unwrap();
        assert!((f.loose.trivial_bound(Norm::L2) - 20.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        for _ in 0..10_000 {
            let x = rng.gen_range(-100.0..100.0);
            assert!(f.loose.forward(&[x]).unwrap()[0].abs() <= 1e-9);
        }
        assert!((f.tight.jacobian(&[0.0]).unwrap().get(0, 0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_factorization_has_unit_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for depth in 1..5 {
            let net = orthogonal_factorization(5, depth, &mut rng);
            assert!((net.trivial_bound(Norm::L2) - 1.0).abs() < 1e-10);
            for l in net.layers() {
                assert!((condition_number(&l.weight).unwrap() - 1.0).abs() < 1e-10);
            }
            let x = [0.3, -1.0, 2.0, 0.0, 0.5];
            for (a, b) in net.forward(&x).unwrap().iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asl_unit_is_tight_at_steepest_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for _ in 0..20 {
            let w = gaussian_matrix(4, 4, &mut rng);
            let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x0 = asl_steepest_point(&w, &b, 0.0);
            let net = asl_unit(w.clone(), b, Activation::Tanh).unwrap();
            let jn = induced_norm(&net.jacobian(&x0).unwrap(), Norm::L2).unwrap();
            let k = net.trivial_bound(Norm::L2);
            assert!((jn - k).abs() <= 1e-6 * k, "{jn} vs {k}");
        }
    }
}
