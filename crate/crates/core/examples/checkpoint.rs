//! Save a trained network, load it back and write its verification report.

use lipcert::cli::{load_dataset, train_run, DatasetKind, RunSpec};
use lipcert::network::{load_checkpoint, save_checkpoint};
use lipcert::verification::{verify, SearchOptions};

fn main() -> lipcert::Result<()> {
    let (train, test) = load_dataset(DatasetKind::Iris, None)?;
    let spec = RunSpec { epochs: 2000, ..RunSpec::iris_default() };
    let (net, _) = train_run(&spec, 0, &train, &test, |_| {})?;
    let dir = std::env::temp_dir().join("lipcert-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("iris.json");
    save_checkpoint(&net, &path)?;
    let back = load_checkpoint(&path)?;
    assert_eq!(back.params(), net.params());
    let report = verify(&back, &train.features, &SearchOptions::default())?;
    println!("{}", report.to_json());
    println!("checkpoint at {}", path.display());
    Ok(())
}
