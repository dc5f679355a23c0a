//! Desk-scale MNIST: 784 → sincos(128) → sincos(128) → 10 trained with the
//! trivial bound penalty, then verified and attacked at ε = 0.5.
//!
//!     scripts/fetch_mnist.sh
//!     cargo run --release --example mnist -- [epochs] [lambda] [train_limit]

use lipcert::cli::{load_dataset, train_run, DatasetKind, RunSpec};
use lipcert::robustness::attack_sweep;
use lipcert::verification::{verify, SearchOptions};

fn main() -> lipcert::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize| args.get(i).map(String::as_str);
    let epochs = arg(0).map_or(2, |s| s.parse().expect("epochs"));
    let lambda = arg(1).map_or(1e-2, |s| s.parse().expect("lambda"));
    let train_limit = arg(2).map(|s| s.parse().expect("train_limit"));

    let (train, test) = load_dataset(DatasetKind::Mnist, None)?;
    let spec = RunSpec { epochs, lambda, train_limit, ..RunSpec::mnist_default() };
    let (net, _) = train_run(&spec, 0, &train, &test, |r| {
        println!("epoch {:>3}  K {:>9.3}  test acc {:.4}  ({:.0}s)", r.epoch, r.k, r.test_acc, r.seconds)
    })?;

    let report = verify(&net, &train.features, &SearchOptions::default())?;
    println!("K₂ {:.3}  L̂ {:.3}  K₂/L̂ {:.3}", report.k_upper, report.empirical_lower, report.tightness);
    let attack = attack_sweep(&net, &test, &[0.5])?;
    println!(
        "ε = 0.5: PGD error {:.2}%, certified error {:.2}%",
        attack.empirical_error_pct[0], attack.certified_error_pct[0]
    );
    Ok(())
}
