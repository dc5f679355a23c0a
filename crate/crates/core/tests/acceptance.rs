//! Acceptance suite. Each test prints one PASS/FAIL line per criterion to
//! stderr and then asserts it.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use lipcert::activations::Activation;
use lipcert::cli::{load_dataset, train_run, DatasetKind, RunSpec};
use lipcert::data::Dataset;
use lipcert::linalg::random::gaussian_matrix;
use lipcert::linalg::{
    condition_number, induced_norm, power_iteration, singular_values, spectral_norm_subgradient, Matrix, Norm,
};
use lipcert::network::fixtures::{counterexample_relu, counterexample_sin, orthogonal_factorization};
use lipcert::network::{kaiming_uniform_init, random_phase_init, random_phase_pair, Layer, Network};
use lipcert::robustness::attack_sweep;
use lipcert::training::{backprop, penalty_value_and_grads, PenaltyKind, PenaltySpec};
use lipcert::verification::{empirical_lower_bound, verify, SearchOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Epochs per run for the MNIST ablation orderings.
const ABLATION_EPOCHS: usize = 8;
const ABLATION_SEEDS: [u64; 2] = [0, 1];

fn report(id: &str, name: &str, checks: &[(String, bool)]) {
    let ok = checks.iter().all(|c| c.1);
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id} {}: {name}", if ok { "PASS" } else { "FAIL" });
    for (what, pass) in checks {
        let _ = writeln!(err, "    [{}] {what}", if *pass { "ok" } else { "FAILED" });
    }
    drop(err);
    assert!(ok, "criterion {id} failed");
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn criterion_1_iris() {
    let start = Instant::now();
    let (train, test) = load_dataset(DatasetKind::Iris, None).unwrap();
    let run = |lambda: f64| {
        let spec = RunSpec { lambda, ..RunSpec::iris_default() };
        let (net, h) = train_run(&spec, 0, &train, &test, |_| {}).unwrap();
        let v = verify(&net, &train.features, &SearchOptions::default()).unwrap();
        (h.last_evaluated().unwrap().clone(), v)
    };
    let (reg, reg_v) = run(1e-2);
    let (unreg, _) = run(0.0);
    let secs = start.elapsed().as_secs_f64();
    report(
        "1",
        "Iris reproduction",
        &[
            (format!("λ=1e-2 test accuracy {:.3} ≥ 0.93", reg.test_acc), reg.test_acc >= 0.93),
            (format!("λ=1e-2 K {:.3} ≤ 10", reg_v.k_upper), reg_v.k_upper <= 10.0),
            (format!("λ=1e-2 K/L̂ {:.4} ≤ 1.1", reg_v.tightness), reg_v.tightness <= 1.1),
            (format!("λ=0 K {:.2} ≥ 50", unreg.k), unreg.k >= 50.0),
            (format!("λ=0 train accuracy {:.3} ≥ 0.99", unreg.train_acc), unreg.train_acc >= 0.99),
            (format!("runtime {secs:.1}s < 300s"), secs < 300.0),
        ],
    );
}

// ------------------------------------------------------------ criteria 2 and 3

struct MnistRun {
    k2: f64,
    tightness: f64,
    test_acc: f64,
    empirical_error: f64,
    certified_error: f64,
    k_trace: Vec<f64>,
}

struct MnistRuns {
    reg: Vec<MnistRun>,
    unreg: Vec<MnistRun>,
    seconds: f64,
}

fn mnist() -> Option<&'static (Dataset, Dataset)> {
    static DATA: OnceLock<Option<(Dataset, Dataset)>> = OnceLock::new();
    DATA.get_or_init(|| match load_dataset(DatasetKind::Mnist, None) {
        Ok(d) => Some(d),
        Err(e) => {
            eprintln!("MNIST unavailable ({e}); run scripts/fetch_mnist.sh");
            None
        }
    })
    .as_ref()
}

fn mnist_runs() -> Option<&'static MnistRuns> {
    static RUNS: OnceLock<Option<MnistRuns>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let (train, test) = mnist()?;
        let start = Instant::now();
        let run = |lambda: f64, seed: u64| {
            let spec = RunSpec { lambda, ..RunSpec::mnist_default() };
            let (net, h) = train_run(&spec, seed, train, test, |_| {}).unwrap();
            let search = SearchOptions { seed, ..SearchOptions::default() };
            let v = verify(&net, &train.features, &search).unwrap();
            let a = attack_sweep(&net, test, &[0.5]).unwrap();
            let r = MnistRun {
                k2: v.k_upper,
                tightness: v.tightness,
                test_acc: h.last_evaluated().unwrap().test_acc,
                empirical_error: a.empirical_error_pct[0],
                certified_error: a.certified_error_pct[0],
                k_trace: h.records.iter().map(|e| e.k).collect(),
            };
            eprintln!(
                "    mnist λ={lambda} seed {seed}: K₂ {:.3}  K/L̂ {:.3}  test acc {:.4}  PGD {:.2}%  certified {:.2}%",
                r.k2, r.tightness, r.test_acc, r.empirical_error, r.certified_error
            );
            r
        };
        let seeds = [0, 1, 2];
        let reg = seeds.iter().map(|&s| run(1e-2, s)).collect();
        let unreg = seeds.iter().map(|&s| run(0.0, s)).collect();
        Some(MnistRuns { reg, unreg, seconds: start.elapsed().as_secs_f64() })
    })
    .as_ref()
}

fn missing_mnist(id: &str, name: &str) {
    report(id, name, &[("MNIST files found (scripts/fetch_mnist.sh)".into(), false)]);
}

#[test]
fn criterion_2_mnist_desk_scale() {
    let Some(runs) = mnist_runs() else { return missing_mnist("2", "MNIST desk scale") };
    let col = |rs: &[MnistRun], f: fn(&MnistRun) -> f64| mean(&rs.iter().map(f).collect::<Vec<_>>());
    let k_reg = col(&runs.reg, |r| r.k2);
    let tight = col(&runs.reg, |r| r.tightness);
    let acc = col(&runs.reg, |r| r.test_acc);
    let k_unreg = col(&runs.unreg, |r| r.k2);
    report(
        "2",
        "MNIST desk scale (3 seeds, 20 epochs, means)",
        &[
            (format!("λ=1e-2 K₂ {k_reg:.3} ∈ [4, 9]"), (4.0..=9.0).contains(&k_reg)),
            (format!("λ=1e-2 K/L̂ {tight:.3} ≤ 1.3"), tight <= 1.3),
            (format!("λ=1e-2 test accuracy {:.2}% ≥ 97.5%", 100.0 * acc), acc >= 0.975),
            (format!("λ=0 K₂ {k_unreg:.2} ≥ 50"), k_unreg >= 50.0),
            (format!("runtime {:.0}s < 7200s", runs.seconds), runs.seconds < 7200.0),
        ],
    );
}

#[test]
fn criterion_3_pgd_and_certification() {
    let Some(runs) = mnist_runs() else { return missing_mnist("3", "PGD/certification ordering") };
    let col = |rs: &[MnistRun], f: fn(&MnistRun) -> f64| mean(&rs.iter().map(f).collect::<Vec<_>>());
    let emp_reg = col(&runs.reg, |r| r.empirical_error);
    let emp_unreg = col(&runs.unreg, |r| r.empirical_error);
    let cert_reg = col(&runs.reg, |r| r.certified_error);
    let cert_unreg = col(&runs.unreg, |r| r.certified_error);
    report(
        "3",
        "PGD/certification ordering at ε = 0.5",
        &[
            (
                format!("PGD error regularized {emp_reg:.2}% ≤ unregularized {emp_unreg:.2}% − 3"),
                emp_reg <= emp_unreg - 3.0,
            ),
            (format!("certified error regularized {cert_reg:.2}% ≤ 50%"), cert_reg <= 50.0),
            (format!("certified error unregularized {cert_unreg:.2}% ≥ 95%"), cert_unreg >= 95.0),
        ],
    );
}

/// Seed-averaged K of the penalized MNIST runs falls in at least 90% of the
/// epochs after epoch 5.
#[test]
fn penalized_k_trends_down_after_epoch_5() {
    let Some(runs) = mnist_runs() else { return missing_mnist("trend", "penalized K trend") };
    let epochs = runs.reg[0].k_trace.len();
    let avg: Vec<f64> = (0..epochs).map(|e| mean(&runs.reg.iter().map(|r| r.k_trace[e]).collect::<Vec<_>>())).collect();
    let steps: Vec<bool> = (6..epochs).map(|e| avg[e] < avg[e - 1]).collect();
    let down = steps.iter().filter(|&&d| d).count();
    let trace: Vec<String> = avg.iter().map(|k| format!("{k:.3}")).collect();
    eprintln!("    seed-averaged K by epoch: {}", trace.join(" "));
    report(
        "trend",
        "penalized K decreases after epoch 5",
        &[(format!("{down}/{} epochs decrease (≥ 90%)", steps.len()), down as f64 >= 0.9 * steps.len() as f64)],
    );
}

// ---------------------------------------------------------------- criterion 4

fn sincos_unit(n: usize, h: usize, out: usize, rng: &mut ChaCha8Rng) -> Network {
    let w = gaussian_matrix(h, n, rng);
    let ab = gaussian_matrix(out, 2 * h, rng);
    Network::new(n, vec![Layer::new(w, Some(Activation::SinCos), None), Layer::linear(ab)], Norm::L2).unwrap()
}

#[test]
fn criterion_4_theorem_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let mut checks = Vec::new();

    // (a) sandwich on random single-layer sincos units
    let mut violations = 0;
    for t in 0..100 {
        let n = 2 + t % 4;
        let net = sincos_unit(n, n, 1 + t % 3, &mut rng);
        let k = net.trivial_bound(Norm::L2);
        let kappa = condition_number(&net.layers()[0].weight).unwrap();
        let points = gaussian_matrix(16, n, &mut rng);
        let opts = SearchOptions { restarts: 10, seed: t as u64, ..SearchOptions::default() };
        let l = empirical_lower_bound(&net, &points, &opts).unwrap().value;
        let lower = k / (std::f64::consts::SQRT_2 * kappa);
        if l < lower * (1.0 - 1e-6) - 1e-6 || l > k * (1.0 + 1e-6) + 1e-6 {
            violations += 1;
        }
    }
    checks.push((format!("(a) sandwich K/(√2κ) ≤ L̂ ≤ K: {violations} violations in 100 units"), violations == 0));

    // (b) counterexample fixtures
    let opts = SearchOptions::default();
    let relu = counterexample_relu(20).unwrap();
    let k_relu = relu.loose.trivial_bound(Norm::L2);
    let grid = |lo: f64, hi: f64, m: usize| Matrix::from_fn(m, 1, |i, _| lo + (hi - lo) * i as f64 / (m - 1) as f64);
    let l_relu = empirical_lower_bound(&relu.loose, &grid(-25.0, 5.0, 64), &opts).unwrap().value;
    checks.push((
        format!("(b) relu d=20: K = {k_relu} (= d), L̂ = {l_relu:.8} (1 ± 1e-4)"),
        (k_relu - 20.0).abs() <= 1e-12 * 20.0 && (l_relu - 1.0).abs() <= 1e-4,
    ));
    let sin = counterexample_sin(10).unwrap();
    let l_sin = empirical_lower_bound(&sin.loose, &grid(-10.0, 10.0, 64), &opts).unwrap().value;
    checks.push((format!("(b) sin d=10: L̂ = {l_sin:.2e} ≤ 1e-6"), l_sin <= 1e-6));

    // (c) linear-product theorem
    let mut worst: f64 = 0.0;
    for depth in 1..=5 {
        for n in [2, 5, 8] {
            let net = orthogonal_factorization(n, depth, &mut rng);
            worst = worst.max((net.trivial_bound(Norm::L2) - 1.0).abs());
        }
    }
    checks.push((format!("(c) orthogonal factorizations |K − 1| ≤ {worst:.1e} (≤ 1e-10)"), worst <= 1e-10));
    let base = kaiming_uniform_init(&[5, 8, 8, 3], Activation::Relu, true, Norm::L2, &mut rng).unwrap();
    let scaled = base.relu_rescale(0, 1e3).unwrap();
    let ratio = scaled.trivial_bound(Norm::L2) / base.trivial_bound(Norm::L2);
    let mut fwd: f64 = 0.0;
    for _ in 0..100 {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (a, b) = (base.forward(&x).unwrap(), scaled.forward(&x).unwrap());
        fwd = fwd.max(a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
    }
    checks.push((
        format!("(c) relu_rescale(10³): K × {ratio:.1} (≥ 100), forward change {fwd:.1e} (≤ 1e-9)"),
        ratio >= 100.0 && fwd <= 1e-9,
    ));

    // (d) random-phase second moment, activation applied to x first
    let (d, width, alpha, draws) = (3, 6, 0.7, 4000);
    let x = [0.4, -1.3, 2.2];
    for depth in 1..=3 {
        let mut sum = vec![0.0; d * d];
        let mut sum_sq = vec![0.0; d * d];
        for _ in 0..draws {
            let mut layers = vec![Layer::new(Matrix::identity(d), Some(Activation::SinCos), None)];
            let mut fan = d;
            for l in 0..depth {
                let rows = if l + 1 == depth { d } else { width };
                let act = (l + 1 < depth).then_some(Activation::SinCos);
                layers.push(Layer::new(random_phase_pair(rows, fan, alpha, &mut rng), act, None));
                fan = rows;
            }
            let net = Network::new(d, layers, Norm::L2).unwrap();
            let j = net.jacobian(&x).unwrap();
            let m = j.matmul_tr(&j);
            for (k, v) in m.as_slice().iter().enumerate() {
                sum[k] += v;
                sum_sq[k] += v * v;
            }
        }
        let target = alpha.powi(depth as i32);
        let mut worst_z: f64 = 0.0;
        for k in 0..d * d {
            let mean = sum[k] / draws as f64;
            let var = (sum_sq[k] / draws as f64 - mean * mean) * draws as f64 / (draws - 1) as f64;
            let se = (var / draws as f64).sqrt();
            let expect = if k / d == k % d { target } else { 0.0 };
            worst_z = worst_z.max((mean - expect).abs() / se);
        }
        checks.push((
            format!("(d) random phase L={depth}: worst entry {worst_z:.2} standard errors from α^L I (≤ 5)"),
            worst_z <= 5.0,
        ));
    }

    let secs = start.elapsed().as_secs_f64();
    checks.push((format!("runtime {secs:.1}s < 300s"), secs < 300.0));
    report("4", "theorem suite", &checks);
}

// ---------------------------------------------------------------- criterion 5

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

fn random_matrix_pair(rng: &mut ChaCha8Rng) -> (Matrix, Matrix) {
    let (r, k, c) = (rng.gen_range(1..=12), rng.gen_range(1..=12), rng.gen_range(1..=12));
    (gaussian_matrix(r, k, rng), gaussian_matrix(k, c, rng))
}

fn random_small_net(rng: &mut ChaCha8Rng, act: Activation) -> Network {
    let depth = rng.gen_range(1..=3);
    let mut dims = vec![rng.gen_range(2..=8)];
    for _ in 0..depth {
        dims.push(rng.gen_range(2..=8));
    }
    if act == Activation::SinCos {
        random_phase_init(&dims, 1.0, Norm::L2, rng).unwrap()
    } else {
        kaiming_uniform_init(&dims, act, true, Norm::L2, rng).unwrap()
    }
}

/// Smallest relative gap between consecutive singular values of any layer.
fn min_sv_gap(net: &Network) -> f64 {
    net.layers()
        .iter()
        .map(|l| {
            let s = singular_values(&l.weight);
            if s.len() < 2 {
                return f64::INFINITY;
            }
            (s[0] - s[1]) / s[0]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Pre-activations of every hidden layer stay ≥ `tol` away from zero.
fn away_from_kinks(net: &Network, x: &Matrix, tol: f64) -> bool {
    let trace = net.trace(x);
    trace.pre.iter().take(net.layers().len() - 1).all(|z| z.as_slice().iter().all(|v| v.abs() > tol))
}

#[test]
fn criterion_5_numerics_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let mut checks = Vec::new();

    // induced-norm properties on 1000 random matrices
    let (mut sub, mut hom, mut dual, mut pi) = (0, 0, 0, 0);
    let mut worst_pi: f64 = 0.0;
    for t in 0..1000 {
        let (a, b) = random_matrix_pair(&mut rng);
        for p in Norm::ALL {
            let ab = induced_norm(&a.matmul(&b), p).unwrap();
            if ab > induced_norm(&a, p).unwrap() * induced_norm(&b, p).unwrap() + 1e-10 {
                sub += 1;
            }
            let c = rng.gen_range(-5.0..5.0);
            if rel_err(induced_norm(&a.scaled(c), p).unwrap(), c.abs() * induced_norm(&a, p).unwrap()) > 1e-12 {
                hom += 1;
            }
        }
        if induced_norm(&a, Norm::L1).unwrap() != induced_norm(&a.transpose(), Norm::Inf).unwrap() {
            dual += 1;
        }
        let n = if t % 10 == 0 { rng.gen_range(32..=64) } else { rng.gen_range(1..=16) };
        let m = gaussian_matrix(n, rng.gen_range(1..=64), &mut rng);
        let e = rel_err(power_iteration(&m, None).sigma, singular_values(&m)[0]);
        worst_pi = worst_pi.max(e);
        if e > 1e-9 {
            pi += 1;
        }
    }
    checks.push((format!("submultiplicativity: {sub} violations / 3000"), sub == 0));
    checks.push((format!("homogeneity: {hom} violations / 3000"), hom == 0));
    checks.push((format!("1/∞ duality: {dual} violations / 1000"), dual == 0));
    checks.push((format!("power iteration vs SVD: {pi} violations / 1000 (worst {worst_pi:.1e})"), pi == 0));

    // spectral subgradient directional derivative
    let (mut sg_bad, mut sg_n) = (0, 0);
    while sg_n < 200 {
        let m = gaussian_matrix(4, 4, &mut rng);
        let s = singular_values(&m);
        if s[0] - s[1] <= 0.1 {
            continue;
        }
        sg_n += 1;
        let g = gaussian_matrix(4, 4, &mut rng);
        let h = 1e-6;
        let at = |t: f64| induced_norm(&m.add(&g.scaled(t)), Norm::L2).unwrap();
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let an = spectral_norm_subgradient(&m).inner(&g);
        if (fd - an).abs() > 1e-4 * an.abs().max(1e-3) {
            sg_bad += 1;
        }
    }
    checks.push((format!("spectral subgradient: {sg_bad} / 200 beyond 1e-4"), sg_bad == 0));

    // penalties: directional finite differences
    let kinds = [
        PenaltySpec::trivial_product(1.0, Norm::L2),
        PenaltySpec::trivial_product(1.0, Norm::L1),
        PenaltySpec::trivial_product(1.0, Norm::Inf),
        PenaltySpec::new(PenaltyKind::Frobenius, 1.0),
        PenaltySpec::new(PenaltyKind::Y17, 1.0),
        PenaltySpec::new(PenaltyKind::N24, 1.0),
    ];
    let (mut pen_bad, mut pen_n) = (0, 0);
    while pen_n < 60 {
        let net = random_small_net(&mut rng, Activation::Tanh3);
        if min_sv_gap(&net) < 1e-3 {
            continue;
        }
        let spec = kinds[pen_n % kinds.len()];
        pen_n += 1;
        let (_, grads) = penalty_value_and_grads(&net, &spec);
        let dir: Vec<Matrix> =
            net.layers().iter().map(|l| gaussian_matrix(l.weight.rows(), l.weight.cols(), &mut rng)).collect();
        let analytic: f64 = grads.iter().zip(&dir).map(|(g, d)| g.inner(d)).sum();
        let h = 1e-6;
        let shifted = |s: f64| {
            let layers = net
                .layers()
                .iter()
                .zip(&dir)
                .map(|(l, d)| Layer::new(l.weight.add(&d.scaled(s)), l.activation, l.bias.clone()))
                .collect();
            let n2 = Network::new(net.input_dim(), layers, Norm::L2).unwrap();
            penalty_value_and_grads(&n2, &spec).0
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        if rel_err(fd, analytic) > 1e-4 {
            pen_bad += 1;
        }
    }
    checks.push((format!("penalty gradients: {pen_bad} / 60 beyond 1e-4"), pen_bad == 0));

    // end-to-end backprop, every parameter, central differences h = 1e-6
    let acts = [Activation::SinCos, Activation::Tanh3, Activation::Abs, Activation::Relu, Activation::CRelu];
    let (mut bp_bad, mut bp_params, mut nets) = (0, 0, 0);
    while nets < 40 {
        let act = acts[nets % acts.len()];
        let net = random_small_net(&mut rng, act);
        let x = gaussian_matrix(3, net.input_dim(), &mut rng);
        let classes = net.output_dim();
        let labels: Vec<usize> = (0..3).map(|_| rng.gen_range(0..classes)).collect();
        let spec = if nets % 2 == 0 { PenaltySpec::none() } else { PenaltySpec::trivial_product(0.1, Norm::L2) };
        if !away_from_kinks(&net, &x, 1e-3) || (spec.is_active() && min_sv_gap(&net) < 1e-3) {
            continue;
        }
        nets += 1;
        let (_, grads) = backprop(&net, &x, &labels, &spec).unwrap();
        let analytic: Vec<f64> = grads
            .iter()
            .flat_map(|g| g.weight.as_slice().iter().copied().chain(g.bias.iter().flatten().copied()))
            .collect();
        let p0 = net.params();
        let mut probe = net.clone();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut loss_at = |s: f64| {
                let mut p = p0.clone();
                p[i] += s;
                probe.set_params(&p);
                backprop(&probe, &x, &labels, &spec).unwrap().0
            };
            let fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            bp_params += 1;
            if (fd - analytic[i]).abs() > 1e-4 * fd.abs().max(analytic[i].abs()).max(1e-3) {
                bp_bad += 1;
            }
        }
    }
    checks.push((format!("backprop: {bp_bad} / {bp_params} parameters beyond 1e-4 relative"), bp_bad == 0));

    let secs = start.elapsed().as_secs_f64();
    checks.push((format!("runtime {secs:.1}s < 120s"), secs < 120.0));
    report("5", "numerics suite", &checks);
}

// ---------------------------------------------------------------- criterion 6

struct Ablation {
    k: f64,
    tightness: f64,
}

fn ablate(spec: &RunSpec) -> Option<Ablation> {
    let (train, test) = mnist()?;
    let (mut ks, mut ts) = (Vec::new(), Vec::new());
    for seed in ABLATION_SEEDS {
        let s = RunSpec { epochs: ABLATION_EPOCHS, ..spec.clone() };
        let (net, _) = train_run(&s, seed, train, test, |_| {}).unwrap();
        let search = SearchOptions { seed, ..SearchOptions::default() };
        let v = verify(&net, &train.features, &search).unwrap();
        ks.push(v.k_upper);
        ts.push(v.tightness);
    }
    Some(Ablation { k: mean(&ks), tightness: mean(&ts) })
}

#[test]
fn criterion_6_ablation_trends() {
    if mnist().is_none() {
        return missing_mnist("6", "ablation trends");
    }
    let mut checks = Vec::new();
    let acts = [Activation::SinCos, Activation::Tanh3, Activation::CRelu, Activation::Abs, Activation::Relu];
    let by_act: Vec<(Activation, Ablation)> = acts
        .iter()
        .map(|&a| (a, ablate(&RunSpec { activation: a, ..RunSpec::mnist_default() }).unwrap()))
        .collect();
    for (a, r) in &by_act {
        eprintln!("    activation {:<7} K {:>7.3}  K/L̂ {:.3}", a.id(), r.k, r.tightness);
    }
    let min_tight = by_act.iter().min_by(|a, b| a.1.tightness.total_cmp(&b.1.tightness)).unwrap();
    let max_k = by_act.iter().max_by(|a, b| a.1.k.total_cmp(&b.1.k)).unwrap();
    checks.push((
        format!("abs has the smallest K/L̂ (smallest: {} at {:.3})", min_tight.0.id(), min_tight.1.tightness),
        min_tight.0 == Activation::Abs,
    ));
    checks.push((
        format!("relu has the largest K (largest: {} at {:.3})", max_k.0.id(), max_k.1.k),
        max_k.0 == Activation::Relu,
    ));

    let trivial = &by_act[0].1;
    let pen = |kind: PenaltyKind, lambda: f64| {
        ablate(&RunSpec { penalty: kind, lambda, ..RunSpec::mnist_default() }).unwrap()
    };
    let frob = pen(PenaltyKind::Frobenius, 1e-4);
    let n24 = pen(PenaltyKind::N24, 1e-4);
    let y17 = pen(PenaltyKind::Y17, 1e-2);
    checks.push((format!("Frobenius K/L̂ {:.3} ≥ 1.5", frob.tightness), frob.tightness >= 1.5));
    checks.push((format!("N24 K/L̂ {:.3} ≥ 1.5", n24.tightness), n24.tightness >= 1.5));
    checks.push((format!("Y17 K/L̂ {:.3} ≤ 1.35", y17.tightness), y17.tightness <= 1.35));
    checks.push((format!("trivial product K/L̂ {:.3} ≤ 1.35", trivial.tightness), trivial.tightness <= 1.35));
    report("6", &format!("ablation trends ({ABLATION_EPOCHS} epochs, seeds {ABLATION_SEEDS:?})"), &checks);
}

#[test]
fn certified_points_survive_pgd() {
    // soundness: no certified MNIST test point is broken by the attack
    let Some((train, test)) = mnist() else { return };
    let spec = RunSpec { epochs: 1, ..RunSpec::mnist_default() };
    let (net, _) = train_run(&spec, 0, train, test, |_| {}).unwrap();
    let sub = test.head(1000);
    let k2 = net.trivial_bound(Norm::L2);
    let m = lipcert::robustness::margins(&net, &sub);
    let eps = 0.5;
    let adv = lipcert::robustness::pgd_l2_batch(&net, &sub.features, &sub.labels, eps, 40).unwrap();
    let logits = net.forward_batch(&adv);
    let broken = (0..sub.len())
        .filter(|&i| {
            lipcert::robustness::is_certified(m[i], k2, eps)
                && lipcert::training::argmax(logits.row(i)) != sub.labels[i]
        })
        .count();
    assert_eq!(broken, 0);
}
