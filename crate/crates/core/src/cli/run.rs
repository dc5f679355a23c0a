//! Running plans: data loading, model construction, training and evaluation
//! of every (row, seed) pair, with artifacts written per run.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DatasetKind, ModelKind, Plan, RunSpec};
use crate::activations::Activation;
use crate::data::{default_mnist_dir, load_iris, load_mnist, Dataset};
use crate::error::{Error, Result};
use crate::network::{kaiming_uniform_init, random_phase_init, save_checkpoint, Network};
use crate::robustness::{attack_sweep, AttackReport};
use crate::training::{
    evaluate, train_model, DirectModel, EpochRecord, Model, NormBallModel, TrainHistory, W23Model,
};
use crate::verification::{spectrum_csv, verify, SearchOptions, VerificationReport};

/// Train/test split for `dataset`. Iris always uses split seed 0.
pub fn load_dataset(dataset: DatasetKind, mnist_dir: Option<&Path>) -> Result<(Dataset, Dataset)> {
    match dataset {
        DatasetKind::Iris => Ok(load_iris(0)),
        DatasetKind::Mnist => {
            let dir = mnist_dir.map_or_else(default_mnist_dir, Path::to_path_buf);
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "MNIST directory {} not found (pass --mnist-dir or run scripts/fetch_mnist.sh)",
                    dir.display()
                )));
            }
            load_mnist(&dir)
        }
    }
}

/// Freshly initialized network for `spec`: random-phase for sincos, Kaiming
/// uniform otherwise.
pub fn init_network(spec: &RunSpec, seed: u64) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = spec.dims();
    if spec.activation == Activation::SinCos {
        random_phase_init(&dims, spec.init_alpha, spec.norm_p, &mut rng)
    } else {
        kaiming_uniform_init(&dims, spec.activation, true, spec.norm_p, &mut rng)
    }
}

/// Train one (row, seed) pair and return the final network and history.
pub fn train_run(
    spec: &RunSpec,
    seed: u64,
    train: &Dataset,
    test: &Dataset,
    progress: impl FnMut(&EpochRecord),
) -> Result<(Network, TrainHistory)> {
    spec.validate()?;
    let limited;
    let train = match spec.train_limit {
        Some(n) if n < train.len() => {
            limited = train.head(n);
            &limited
        }
        _ => train,
    };
    let net = init_network(spec, seed)?;
    let cfg = spec.train_config(seed);
    fn go<M: Model>(
        mut m: M,
        train: &Dataset,
        test: &Dataset,
        cfg: &crate::training::TrainConfig,
        progress: impl FnMut(&EpochRecord),
    ) -> Result<(Network, TrainHistory)> {
        let history = train_model(&mut m, train, Some(test), cfg, progress)?;
        Ok((m.finalize()?, history))
    }
    match spec.model {
        ModelKind::Direct => go(DirectModel::new(net), train, test, &cfg, progress),
        ModelKind::NormBall => go(NormBallModel::new(net, spec.bound)?, train, test, &cfg, progress),
        ModelKind::W23 => go(W23Model::new(net, spec.bound)?, train, test, &cfg, progress),
    }
}

/// Everything measured for one (row, seed) pair.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub row: usize,
    pub spec: RunSpec,
    pub seed: u64,
    pub dir: PathBuf,
    pub network: Network,
    pub history: TrainHistory,
    pub train_nll: f64,
    pub test_nll: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub verification: Option<VerificationReport>,
    pub attack: Option<AttackReport>,
}

impl RunResult {
    pub fn checkpoint_path(&self) -> PathBuf {
        self.dir.join("checkpoint.json")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Train and write checkpoints and histories.
    Train,
    /// Also verify and attack every trained network.
    Full,
}

/// Refuse to reuse an existing output directory unless `force`.
pub fn prepare_out_dir(out: &Path, force: bool) -> Result<()> {
    if out.exists() {
        if !force {
            return Err(Error::Config(format!(
                "output directory {} exists (use --force to overwrite)",
                out.display()
            )));
        }
        std::fs::remove_dir_all(out)?;
    }
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// Verify against the training features and attack the test set, writing
/// `verification.json`, `spectrum.csv` and `attack.csv` into `dir`.
pub fn evaluate_run(
    net: &Network,
    train: &Dataset,
    test: &Dataset,
    epsilons: &[f64],
    search: &SearchOptions,
    dir: &Path,
) -> Result<(VerificationReport, AttackReport)> {
    let report = verify(net, &train.features, search)?;
    std::fs::write(dir.join("verification.json"), report.to_json())?;
    std::fs::write(dir.join("spectrum.csv"), spectrum_csv(&report.spectrum))?;
    let attack = attack_sweep(net, test, epsilons)?;
    attack.write_csv(&dir.join("attack.csv"))?;
    Ok((report, attack))
}

fn run_one(
    plan: &Plan,
    row: usize,
    seed: u64,
    stage: Stage,
    data: &(Dataset, Dataset),
    verbose: bool,
) -> Result<RunResult> {
    let spec = &plan.rows[row];
    let tag = format!("{} seed {seed}", spec.label());
    let dir = plan.out.join(spec.label()).join(format!("seed-{seed}"));
    std::fs::create_dir_all(&dir)?;
    let (train, test) = data;
    let (network, history) = train_run(spec, seed, train, test, |r| {
        if verbose && !r.test_acc.is_nan() {
            eprintln!(
                "[{tag}] epoch {:>5}  K {:>10.4}  train nll {:.4}  test acc {:.4}",
                r.epoch, r.k, r.train_nll, r.test_acc
            );
        }
    })?;
    save_checkpoint(&network, &dir.join("checkpoint.json"))?;
    history.write_csv(&dir.join("history.csv"))?;
    let (train_nll, train_acc) = evaluate(&network, train);
    let (test_nll, test_acc) = evaluate(&network, test);
    let (verification, attack) = if stage == Stage::Full {
        let search = SearchOptions { seed, ..plan.search };
        let (v, a) = evaluate_run(&network, train, test, &plan.epsilons, &search, &dir)?;
        if verbose {
            eprintln!("[{tag}] K₂ {:.4}  L̂ {:.4}  K₂/L̂ {:.4}", v.k_upper, v.empirical_lower, v.tightness);
        }
        (Some(v), Some(a))
    } else {
        (None, None)
    };
    Ok(RunResult {
        row,
        spec: spec.clone(),
        seed,
        dir,
        network,
        history,
        train_nll,
        test_nll,
        train_acc,
        test_acc,
        verification,
        attack,
    })
}

/// Run every (row, seed) pair of `plan` into `plan.out`, which must be
/// prepared beforehand. Runs are independent jobs executed in parallel
/// batches bounded by the available parallelism; results come back ordered
/// by row, then seed.
pub fn execute(plan: &Plan, stage: Stage, verbose: bool) -> Result<Vec<RunResult>> {
    let data = load_dataset(plan.dataset(), plan.mnist_dir.as_deref())?;
    let jobs: Vec<(usize, u64)> =
        (0..plan.rows.len()).flat_map(|r| plan.seeds.iter().map(move |&s| (r, s))).collect();
    let width = std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    let mut results = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(width) {
        let outcomes: Vec<Result<RunResult>> = if chunk.len() == 1 {
            vec![run_one(plan, chunk[0].0, chunk[0].1, stage, &data, verbose)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&(r, seed)| {
                        let data = &data;
                        s.spawn(move || run_one(plan, r, seed, stage, data, verbose))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
            })
        };
        for o in outcomes {
            results.push(o?);
        }
    }
    Ok(results)
}
