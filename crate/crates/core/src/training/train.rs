//! Backpropagation and the minibatch training loop.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::loss::{argmax, batch_cross_entropy};
use super::model::{DirectModel, Model};
use super::optim::OptimizerConfig;
use super::penalty::{PenaltyEvaluator, PenaltySpec};
use crate::data::{batches, Dataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{LayerGrad, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub penalty: PenaltySpec,
    /// Evaluate losses and accuracies every this many epochs (and at the
    /// first and last epoch); `K` is recorded every epoch.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            batch_size: 60,
            optimizer: OptimizerConfig::cocob(),
            seed: 0,
            penalty: PenaltySpec::none(),
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be ≥ 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be ≥ 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be ≥ 1".into()));
        }
        self.optimizer.validate()?;
        self.penalty.validate()
    }
}

/// One row of the training history. Unevaluated epochs carry NaN losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub test_nll: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

pub const HISTORY_CSV_HEADER: &str = "epoch,train_nll,test_nll,train_acc,test_acc,K,seconds";

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// Last record with evaluated losses.
    pub fn last_evaluated(&self) -> Option<&EpochRecord> {
        self.records.iter().rev().find(|r| !r.train_nll.is_nan())
    }

    /// Copy with wall times zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> TrainHistory {
        TrainHistory {
            records: self.records.iter().map(|r| EpochRecord { seconds: 0.0, ..*r }).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(HISTORY_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.3}",
                r.epoch, r.train_nll, r.test_nll, r.train_acc, r.test_acc, r.k, r.seconds
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Mean cross-entropy and accuracy over a dataset.
pub fn evaluate(net: &Network, ds: &Dataset) -> (f64, f64) {
    const CHUNK: usize = 2000;
    let mut nll = 0.0;
    let mut correct = 0usize;
    let idx: Vec<usize> = (0..ds.len()).collect();
    for chunk in idx.chunks(CHUNK) {
        let (x, y) = ds.gather(chunk);
        let logits = net.forward_batch(&x);
        let (l, _) = batch_cross_entropy(&logits, &y);
        nll += l * chunk.len() as f64;
        correct += y.iter().enumerate().filter(|&(r, &c)| argmax(logits.row(r)) == c).count();
    }
    let n = ds.len() as f64;
    (nll / n, correct as f64 / n)
}

/// Mean cross-entropy over the batch plus `λ·penalty`, with gradients for
/// every layer.
pub fn backprop(
    net: &Network,
    x: &Matrix,
    labels: &[usize],
    penalty: &PenaltySpec,
) -> Result<(f64, Vec<LayerGrad>)> {
    backprop_with(net, x, labels, &mut PenaltyEvaluator::new(*penalty))
}

pub(crate) fn backprop_with(
    net: &Network,
    x: &Matrix,
    labels: &[usize],
    penalty: &mut PenaltyEvaluator,
) -> Result<(f64, Vec<LayerGrad>)> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if x.rows() != labels.len() || x.cols() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "batch {:?} with {} labels for input width {}",
            x.shape(),
            labels.len(),
            net.input_dim()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= net.output_dim()) {
        return Err(Error::Dimension(format!("label {bad} ≥ output width {}", net.output_dim())));
    }
    let trace = net.trace(x);
    let (ce, g_out) = batch_cross_entropy(trace.output(), labels);
    let (mut grads, _) = net.backward(&trace, &g_out, true, false);
    let spec = *penalty.spec();
    let mut loss = ce;
    if spec.is_active() {
        let weights: Vec<&Matrix> = net.layers().iter().map(|l| &l.weight).collect();
        let (value, pg) = penalty.value_and_grads(&weights);
        loss += spec.lambda * value;
        for (g, p) in grads.iter_mut().zip(&pg) {
            g.weight.add_scaled_mut(spec.lambda, p);
        }
    }
    Ok((loss, grads))
}

fn record(
    epoch: usize,
    net: &Network,
    train: &Dataset,
    test: Option<&Dataset>,
    evaluate_now: bool,
    seconds: f64,
) -> EpochRecord {
    let (train_nll, train_acc) = if evaluate_now { evaluate(net, train) } else { (f64::NAN, f64::NAN) };
    let (test_nll, test_acc) = match test {
        Some(t) if evaluate_now => evaluate(net, t),
        _ => (f64::NAN, f64::NAN),
    };
    EpochRecord {
        epoch,
        train_nll,
        test_nll,
        train_acc,
        test_acc,
        k: net.trivial_bound(net.norm_p()),
        seconds,
    }
}

/// Train `model` on `train`, calling `progress` after every recorded epoch.
pub fn train_model<M: Model>(
    model: &mut M,
    train: &Dataset,
    test: Option<&Dataset>,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<TrainHistory> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let mut net = model.network()?;
    if train.dim() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "dataset width {} vs network input {}",
            train.dim(),
            net.input_dim()
        )));
    }
    let start = Instant::now();
    let mut history = TrainHistory::default();
    let r0 = record(0, &net, train, test, true, 0.0);
    progress(&r0);
    history.records.push(r0);

    let mut params = model.params();
    let mut opt = cfg.optimizer.build(&params);
    let mut penalty = PenaltyEvaluator::new(cfg.penalty);
    for epoch in 1..=cfg.epochs {
        for (b, idx) in batches(train.len(), cfg.batch_size, cfg.seed, epoch as u64).iter().enumerate() {
            let fail = |message: String| Error::Numeric { epoch, batch: b, message };
            let (x, y) = train.gather(idx);
            let (loss, grads) = backprop_with(&net, &x, &y, &mut penalty)?;
            if !loss.is_finite() {
                return Err(fail(format!("loss is {loss}")));
            }
            let flat = model.pullback(&grads).map_err(|e| fail(e.to_string()))?;
            if flat.iter().any(|g| !g.is_finite()) {
                return Err(fail("non-finite gradient".into()));
            }
            opt.step(&mut params, &flat);
            if params.iter().any(|p| !p.is_finite()) {
                return Err(fail("non-finite parameters".into()));
            }
            model.set_params(&params);
            net = model.network().map_err(|e| fail(e.to_string()))?;
        }
        let eval_now = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
        let r = record(epoch, &net, train, test, eval_now, start.elapsed().as_secs_f64());
        if !r.k.is_finite() {
            return Err(Error::Numeric { epoch, batch: 0, message: format!("trivial bound is {}", r.k) });
        }
        progress(&r);
        history.records.push(r);
    }
    Ok(history)
}

/// Train a network directly on its weights.
pub fn train(
    net: Network,
    train_set: &Dataset,
    test: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory)> {
    let mut model = DirectModel::new(net);
    let history = train_model(&mut model, train_set, test, cfg, |_| {})?;
    Ok((model.into_network(), history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::Activation;
    use crate::data::{load_iris, Split};
    use crate::linalg::random::gaussian_matrix;
    use crate::linalg::Norm;
    use crate::network::{kaiming_uniform_init, random_phase_init, Layer};
    use crate::training::PenaltyKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn loss_at(net: &Network, x: &Matrix, y: &[usize], spec: &PenaltySpec) -> f64 {
        backprop(net, x, y, spec).unwrap().0
    }

    fn random_small_net(rng: &mut ChaCha8Rng) -> Network {
        let acts = [Activation::SinCos, Activation::Tanh3, Activation::TanhPair, Activation::Tanh];
        let depth = rng.gen_range(1..=3);
        let d0 = rng.gen_range(1..=8);
        let mut width_in = d0;
        let mut layers = Vec::new();
        for _ in 0..depth - 1 {
            let act = acts[rng.gen_range(0..acts.len())];
            let w = rng.gen_range(1..=8);
            let bias = (act != Activation::SinCos).then(|| (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect());
            layers.push(Layer::new(gaussian_matrix(w, width_in, rng), Some(act), bias));
            width_in = w * act.order();
        }
        let out = rng.gen_range(2..=8);
        let bias = (0..out).map(|_| rng.gen_range(-1.0..1.0)).collect();
        layers.push(Layer::new(gaussian_matrix(out, width_in, rng), None, Some(bias)));
        Network::new(d0, layers, Norm::L2).unwrap()
    }

    #[test]
    fn end_to_end_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let specs = [
            PenaltySpec::none(),
            PenaltySpec::trivial_product(0.1, Norm::L2),
            PenaltySpec::new(PenaltyKind::Frobenius, 0.1),
        ];
        for trial in 0..30 {
            let net = random_small_net(&mut rng);
            let n = rng.gen_range(1..4);
            let x = gaussian_matrix(n, net.input_dim(), &mut rng);
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..net.output_dim())).collect();
            let spec = specs[trial % specs.len()];
            let (_, grads) = backprop(&net, &x, &y, &spec).unwrap();
            let flat: Vec<f64> = grads
                .iter()
                .flat_map(|g| g.weight.as_slice().iter().chain(g.bias.iter().flatten()).copied())
                .collect();
            let p0 = net.params();
            let h = 1e-6;
            for i in 0..p0.len() {
                let mut p = p0.clone();
                let mut shifted = net.clone();
                p[i] += h;
                shifted.set_params(&p);
                let fp = loss_at(&shifted, &x, &y, &spec);
                p[i] -= 2.0 * h;
                shifted.set_params(&p);
                let fm = loss_at(&shifted, &x, &y, &spec);
                let fd = (fp - fm) / (2.0 * h);
                assert!(
                    (fd - flat[i]).abs() <= 1e-4 * flat[i].abs().max(1e-2),
                    "trial {trial} param {i}: fd {fd} vs {}",
                    flat[i]
                );
            }
        }
    }

    #[test]
    fn duplicated_batch_gives_identical_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let net = random_phase_init(&[3, 5, 4], 0.5, Norm::L2, &mut rng).unwrap();
        let x = gaussian_matrix(1, 3, &mut rng);
        let xx = Matrix::from_fn(4, 3, |_, j| x.get(0, j));
        let spec = PenaltySpec::trivial_product(0.01, Norm::L2);
        let (l1, g1) = backprop(&net, &x, &[2], &spec).unwrap();
        let (l4, g4) = backprop(&net, &xx, &[2; 4], &spec).unwrap();
        assert!((l1 - l4).abs() < 1e-14);
        for (a, b) in g1.iter().zip(&g4) {
            assert!(a.weight.max_abs_diff(&b.weight) < 1e-14);
        }
    }

    #[test]
    fn zero_weights_have_zero_product_gradient() {
        let layers = vec![
            Layer::new(Matrix::zeros(3, 2), Some(Activation::Tanh), Some(vec![0.0; 3])),
            Layer::new(Matrix::zeros(2, 3), None, Some(vec![0.0; 2])),
        ];
        let net = Network::new(2, layers, Norm::L2).unwrap();
        let x = Matrix::from_rows(&[&[1.0, 2.0]]);
        let spec = PenaltySpec::trivial_product(1.0, Norm::L2);
        let (_, with) = backprop(&net, &x, &[0], &spec).unwrap();
        let (_, without) = backprop(&net, &x, &[0], &PenaltySpec::none()).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn dimension_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let net = random_phase_init(&[3, 5, 4], 0.5, Norm::L2, &mut rng).unwrap();
        assert!(backprop(&net, &Matrix::zeros(2, 2), &[0, 1], &PenaltySpec::none()).is_err());
        assert!(backprop(&net, &Matrix::zeros(2, 3), &[0], &PenaltySpec::none()).is_err());
        assert!(backprop(&net, &Matrix::zeros(1, 3), &[7], &PenaltySpec::none()).is_err());
    }

    fn tiny_task() -> (Network, Dataset, TrainConfig) {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let net = random_phase_init(&[4, 6, 3], 0.7, Norm::L2, &mut rng).unwrap();
        let (train, _) = load_iris(1);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            penalty: PenaltySpec::trivial_product(1e-2, Norm::L2),
            ..TrainConfig::default()
        };
        (net, train, cfg)
    }

    #[test]
    fn zero_epochs_is_config_error() {
        let (net, train, mut cfg) = tiny_task();
        cfg.epochs = 0;
        assert!(matches!(super::train(net, &train, None, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn history_shape_and_determinism() {
        let (net, train, cfg) = tiny_task();
        let (a, ha) = super::train(net.clone(), &train, Some(&train), &cfg).unwrap();
        let (b, hb) = super::train(net, &train, Some(&train), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha.without_timing(), hb.without_timing());
        assert_eq!(ha.records.len(), cfg.epochs + 1);
        let csv = ha.to_csv();
        assert!(csv.starts_with(HISTORY_CSV_HEADER));
        assert_eq!(csv.lines().count(), cfg.epochs + 2);
    }

    #[test]
    fn eval_cadence_leaves_nan_between() {
        let (net, train, mut cfg) = tiny_task();
        cfg.epochs = 5;
        cfg.eval_every = 2;
        let (_, h) = super::train(net, &train, None, &cfg).unwrap();
        let evaluated: Vec<bool> = h.records.iter().map(|r| !r.train_nll.is_nan()).collect();
        assert_eq!(evaluated, vec![true, false, true, false, true, true]);
        assert!(h.records.iter().all(|r| r.k.is_finite() && r.test_nll.is_nan()));
    }

    #[test]
    fn numeric_failure_carries_context() {
        let (_, train, cfg) = tiny_task();
        let layers = vec![
            Layer::new(Matrix::from_fn(3, 4, |_, _| 1e200), Some(Activation::Tanh), Some(vec![0.0; 3])),
            Layer::new(Matrix::from_fn(3, 3, |_, _| 1e200), None, Some(vec![0.0; 3])),
        ];
        let net = Network::new(4, layers, Norm::L2).unwrap();
        let err = super::train(net, &train, None, &cfg).unwrap_err();
        assert!(matches!(err, Error::Numeric { epoch: 1, batch: 0, .. }), "{err}");
    }

    #[test]
    fn penalized_training_reduces_loss_on_iris() {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let net = kaiming_uniform_init(&[4, 8, 3], Activation::Abs, true, Norm::L2, &mut rng).unwrap();
        let (train, test) = load_iris(0);
        assert_eq!(train.split, Split::Train);
        let cfg = TrainConfig { epochs: 30, batch_size: 10, ..TrainConfig::default() };
        let (_, h) = super::train(net, &train, Some(&test), &cfg).unwrap();
        let first = h.records[0].train_nll;
        let last = h.last().unwrap().train_nll;
        assert!(last < 0.5 * first, "{first} → {last}");
    }
}
