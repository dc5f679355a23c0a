//! Biases can make the trivial bound arbitrarily loose: the same weights give
//! a constant near the bound or far below it depending on the shift.

use lipcert::linalg::{Matrix, Norm};
use lipcert::network::fixtures::{counterexample_relu, counterexample_sin, counterexample_tanh, BiasFixture};
use lipcert::verification::{empirical_lower_bound, SearchOptions};

fn show(name: &str, f: &BiasFixture, lo: f64, hi: f64) -> lipcert::Result<()> {
    let starts = Matrix::from_fn(64, 1, |i, _| lo + (hi - lo) * i as f64 / 63.0);
    let opts = SearchOptions::default();
    let loose = empirical_lower_bound(&f.loose, &starts, &opts)?.value;
    let tight = empirical_lower_bound(&f.tight, &starts, &opts)?.value;
    println!(
        "{name:<5} K = {:>6.2} | loose: true {:>7.4}  L̂ {:>7.4} | tight: true {:>6.2}  L̂ {:>6.2}",
        f.loose.trivial_bound(Norm::L2),
        f.loose_constant,
        loose,
        f.tight_constant,
        tight
    );
    Ok(())
}

fn main() -> lipcert::Result<()> {
    let d = 10;
    show("relu", &counterexample_relu(d)?, -15.0, 5.0)?;
    show("tanh", &counterexample_tanh(d)?, -15.0, 5.0)?;
    show("sin", &counterexample_sin(d)?, -10.0, 10.0)?;
    Ok(())
}
