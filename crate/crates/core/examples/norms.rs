//! Induced norms, power iteration against the SVD, and how conditioning
//! governs the trivial bound of a linear product.

use lipcert::activations::Activation;
use lipcert::linalg::random::gaussian_matrix;
use lipcert::linalg::{condition_number, induced_norm, power_iteration, singular_values, Norm};
use lipcert::network::fixtures::orthogonal_factorization;
use lipcert::network::kaiming_uniform_init;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lipcert::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = gaussian_matrix(5, 7, &mut rng);
    for p in Norm::ALL {
        println!("‖M‖_{p} = {:.6}", induced_norm(&m, p)?);
    }
    let triple = power_iteration(&m, None);
    println!("power iteration σ = {:.12}, SVD σ₁ = {:.12}", triple.sigma, singular_values(&m)[0]);
    println!("κ(M) = {:.4}", condition_number(&m)?);

    let net = orthogonal_factorization(6, 4, &mut rng);
    println!("\northogonal factorization of I: K = {:.12}", net.trivial_bound(Norm::L2));
    let relu = kaiming_uniform_init(&[4, 8, 3], Activation::Relu, true, Norm::L2, &mut rng)?;
    let x = [1.0, 0.0, -1.0, 0.5];
    for lambda in [1.0, 10.0, 1000.0] {
        let deep = relu.relu_rescale(0, lambda)?;
        let y = deep.forward(&x)?;
        println!("relu rescale λ = {lambda:>6}: K = {:>12.3}  f(x)₀ = {:.9}", deep.trivial_bound(Norm::L2), y[0]);
    }
    Ok(())
}
