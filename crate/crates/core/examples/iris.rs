//! Train the width-4 sincos Iris classifier with and without the trivial
//! bound penalty, then compare the bound to the empirical lower bound.
//!
//!     cargo run --release --example iris

use lipcert::cli::{load_dataset, train_run, DatasetKind, RunSpec};
use lipcert::verification::{verify, SearchOptions};

fn main() -> lipcert::Result<()> {
    let (train, test) = load_dataset(DatasetKind::Iris, None)?;
    println!("{:>6} {:>10} {:>10} {:>8} {:>9} {:>9}", "λ", "K", "L̂", "K/L̂", "train acc", "test acc");
    for lambda in [0.0, 1e-2] {
        let spec = RunSpec { lambda, ..RunSpec::iris_default() };
        let (net, history) = train_run(&spec, 0, &train, &test, |_| {})?;
        let last = history.last_evaluated().expect("final epoch is evaluated");
        let report = verify(&net, &train.features, &SearchOptions::default())?;
        println!(
            "{lambda:>6} {:>10.3} {:>10.3} {:>8.3} {:>9.3} {:>9.3}",
            report.k_upper, report.empirical_lower, report.tightness, last.train_acc, last.test_acc
        );
    }
    Ok(())
}
