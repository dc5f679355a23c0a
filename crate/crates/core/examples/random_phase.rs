//! Random-phase initialization keeps `E[Df Dfᵀ] = α^L I` at any input.
//! Monte-Carlo estimate over fresh networks at a fixed point.

use lipcert::linalg::{Matrix, Norm};
use lipcert::network::random_phase_init;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lipcert::Result<()> {
    let (d, width, out, draws, alpha) = (3, 16, 3, 4000, 0.8);
    let x = [0.3, -1.2, 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for layers in 1..=3 {
        let mut dims = vec![d];
        dims.extend(std::iter::repeat(width).take(layers));
        dims.push(out);
        let mut mean = Matrix::zeros(out, out);
        for _ in 0..draws {
            let net = random_phase_init(&dims, alpha, Norm::L2, &mut rng)?;
            let j = net.jacobian(&x)?;
            mean = mean.add(&j.matmul_tr(&j).scaled(1.0 / draws as f64));
        }
        let target = alpha.powi(layers as i32 + 1);
        let diag: Vec<String> = (0..out).map(|i| format!("{:.3}", mean.get(i, i))).collect();
        println!("hidden layers {layers}: diag [{}], target α^L = {target:.3}", diag.join(", "));
    }
    Ok(())
}
