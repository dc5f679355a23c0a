//! Alternative weight penalties on Iris and the tightness they leave behind.

use lipcert::cli::{load_dataset, train_run, DatasetKind, RunSpec};
use lipcert::training::PenaltyKind;
use lipcert::verification::{verify, SearchOptions};

fn main() -> lipcert::Result<()> {
    let (train, test) = load_dataset(DatasetKind::Iris, None)?;
    let runs = [
        (PenaltyKind::None, 0.0),
        (PenaltyKind::TrivialProduct, 1e-2),
        (PenaltyKind::Frobenius, 1e-4),
        (PenaltyKind::N24, 1e-4),
        (PenaltyKind::Y17, 1e-2),
    ];
    println!("{:<16} {:>8} {:>9} {:>8} {:>8} {:>8}", "penalty", "λ", "K", "L̂", "K/L̂", "test acc");
    for (penalty, lambda) in runs {
        let spec = RunSpec { penalty, lambda, epochs: 5000, ..RunSpec::iris_default() };
        let (net, history) = train_run(&spec, 0, &train, &test, |_| {})?;
        let r = verify(&net, &train.features, &SearchOptions::default())?;
        let acc = history.last_evaluated().map_or(f64::NAN, |h| h.test_acc);
        println!(
            "{:<16} {lambda:>8} {:>9.3} {:>8.3} {:>8.3} {acc:>8.3}",
            format!("{penalty:?}"),
            r.k_upper,
            r.empirical_lower,
            r.tightness
        );
    }
    Ok(())
}
