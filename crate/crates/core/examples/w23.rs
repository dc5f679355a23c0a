//! Two ways to train under a fixed Lipschitz bound: the W23 rational
//! parameterization of the spectral unit ball on a ReLU network, and
//! norm-ball rescaling on an absolute-value network.

use lipcert::cli::{load_dataset, train_run, DatasetKind, ModelKind, RunSpec};
use lipcert::activations::Activation;
use lipcert::linalg::random::gaussian_matrix;
use lipcert::linalg::{induced_norm, Norm};
use lipcert::network::w23_parameterize;
use lipcert::training::PenaltyKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lipcert::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for scale in [0.1, 1.0, 5.0] {
        for _ in 0..100 {
            let x = gaussian_matrix(6, 6, &mut rng).scaled(scale);
            let y = gaussian_matrix(4, 6, &mut rng).scaled(scale);
            worst = worst.max(induced_norm(&w23_parameterize(&x, &y)?, Norm::L2)?);
        }
    }
    println!("largest ‖W‖₂ over 300 random (X, Y): {worst:.9}");

    let (train, test) = load_dataset(DatasetKind::Iris, None)?;
    let bound = 4.0;
    for (name, model, activation) in [("W23", ModelKind::W23, Activation::Relu), ("Ours", ModelKind::NormBall, Activation::Abs)] {
        let spec = RunSpec {
            widths: vec![16, 16],
            activation,
            model,
            bound,
            penalty: PenaltyKind::None,
            lambda: 0.0,
            epochs: 2000,
            ..RunSpec::iris_default()
        };
        let (net, history) = train_run(&spec, 0, &train, &test, |_| {})?;
        let last = history.last_evaluated().expect("evaluated");
        println!(
            "{name:<4}  K₂ = {:.4} (bound {bound})  train nll {:.4}  test acc {:.3}",
            net.trivial_bound(Norm::L2),
            last.train_nll,
            last.test_acc
        );
    }
    Ok(())
}
