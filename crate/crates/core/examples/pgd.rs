//! PGD attacks against certified radii on a penalized Iris network. Every
//! certified point must survive the attack.

use lipcert::cli::{load_dataset, train_run, DatasetKind, RunSpec};
use lipcert::linalg::Norm;
use lipcert::robustness::{attack_sweep, is_certified, margins, pgd_l2_batch, PGD_STEPS};
use lipcert::training::argmax;

fn main() -> lipcert::Result<()> {
    let (train, test) = load_dataset(DatasetKind::Iris, None)?;
    let (net, _) = train_run(&RunSpec::iris_default(), 0, &train, &test, |_| {})?;
    let eps = [1.0, 0.5, 0.25, 0.125];
    let report = attack_sweep(&net, &test, &eps)?;
    print!("K₂ = {:.3}, clean error {:.2}%\n{}", report.k2, report.clean_error_pct, report.to_csv());

    let k2 = net.trivial_bound(Norm::L2);
    let m = margins(&net, &test);
    for e in eps {
        let adv = pgd_l2_batch(&net, &test.features, &test.labels, e, PGD_STEPS)?;
        let logits = net.forward_batch(&adv);
        let broken = (0..test.len())
            .filter(|&i| is_certified(m[i], k2, e) && argmax(logits.row(i)) != test.labels[i])
            .count();
        println!("ε = {e}: certified points broken by PGD: {broken}");
    }
    Ok(())
}
