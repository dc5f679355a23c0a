//! Command-line interface: `train`, `verify`, `attack`, `certify` and
//! `reproduce`, plus the experiment plumbing they share.

mod config;
mod report;
mod run;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{DatasetKind, ExperimentConfig, ModelKind, Plan, Preset, RunSpec, W23_BOUND};
pub use report::{csv, markdown, row_name, summarize, write_summary, RowSummary, Stat};
pub use run::{evaluate_run, execute, init_network, load_dataset, prepare_out_dir, train_run, RunResult, Stage};

use crate::error::{Error, Result};
use crate::linalg::Norm;
use crate::network::{load_checkpoint, Network};
use crate::robustness::{certified_error_from_margins, margins};
use crate::verification::{spectrum_csv, verify, SearchOptions};

#[derive(Debug, Parser)]
#[command(name = "lipcert", version, about = "Train and certify Lipschitz-bounded MLPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every row and seed of a preset or config; write checkpoints and histories.
    Train(Flags),
    /// Upper and lower Lipschitz bounds of a checkpoint.
    Verify(CheckpointFlags),
    /// PGD and certified error of a checkpoint over a list of radii.
    Attack(CheckpointFlags),
    /// Certified error only (margins against the trivial bound).
    Certify(CheckpointFlags),
    /// Train, verify and attack a preset's ensemble and emit summary tables.
    Reproduce(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// iris, mnist, activations, pnorm-inf, pnorm-1, penalties or w23.
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat JSON config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Single seed (shorthand for --seeds S).
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated ensemble seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// 1, 2 or inf.
    #[arg(long)]
    pub norm_p: Option<String>,
    #[arg(long)]
    pub activation: Option<String>,
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace an existing output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckpointFlags {
    /// Checkpoint JSON written by `train`.
    pub checkpoint: PathBuf,
    /// Seed for the lower-bound search restarts.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config supplying `epsilons`, `restarts` or `mnist_dir`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reinterpret the network in this norm (1, 2 or inf).
    #[arg(long)]
    pub norm_p: Option<String>,
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    /// Directory for the reports (defaults to the checkpoint's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Process exit code for an error: 2 for bad configuration or checkpoints,
/// 3 for numeric failures, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Checkpoint(_)
        | Error::UnknownActivation(_)
        | Error::InvalidArgument(_)
        | Error::Json(_) => 2,
        Error::Numeric { .. } | Error::NonFinite | Error::BoundViolation(_) => 3,
        _ => 1,
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run_command(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(f) => cmd_train(&f).map(|_| ()),
        Command::Reproduce(f) => cmd_reproduce(&f).map(|_| ()),
        Command::Verify(f) => cmd_verify(&f),
        Command::Attack(f) => cmd_attack(&f),
        Command::Certify(f) => cmd_certify(&f),
    }
}

fn parse_norm(s: &str) -> Result<Norm> {
    s.parse().map_err(|_| Error::Config(format!("unknown norm `{s}` (expected 1, 2 or inf)")))
}

/// Config file (if any) with flag overrides applied.
pub fn config_from_flags(f: &Flags) -> Result<ExperimentConfig> {
    let mut cfg = match &f.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.merge(ExperimentConfig {
        preset: f.preset.clone(),
        seeds: f.seed.map(|s| vec![s]).or_else(|| f.seeds.clone()),
        epochs: f.epochs,
        lambda: f.lambda,
        norm_p: f.norm_p.as_deref().map(parse_norm).transpose()?,
        activation: f.activation.clone(),
        mnist_dir: f.mnist_dir.clone(),
        out: f.out.clone(),
        ..Default::default()
    });
    Ok(cfg)
}

fn run_plan(f: &Flags, stage: Stage) -> Result<(Plan, Vec<RowSummary>)> {
    let plan = config_from_flags(f)?.resolve()?;
    prepare_out_dir(&plan.out, f.force)?;
    std::fs::write(plan.out.join("config.json"), serde_json::to_string_pretty(&plan.rows)?)?;
    let results = execute(&plan, stage, true)?;
    let rows = summarize(plan.preset, &results);
    let title = match stage {
        Stage::Train => format!("{} (training)", plan.name),
        Stage::Full => plan.name.clone(),
    };
    write_summary(&plan.out, &title, plan.preset, &rows)?;
    println!("{}", markdown(&title, plan.preset, &rows));
    println!("artifacts in {}", plan.out.display());
    Ok((plan, rows))
}

pub fn cmd_train(f: &Flags) -> Result<(Plan, Vec<RowSummary>)> {
    run_plan(f, Stage::Train)
}

pub fn cmd_reproduce(f: &Flags) -> Result<(Plan, Vec<RowSummary>)> {
    if f.preset.is_none() && f.config.is_none() {
        return Err(Error::Config("reproduce needs --preset or --config".into()));
    }
    run_plan(f, Stage::Full)
}

struct Loaded {
    net: Network,
    cfg: ExperimentConfig,
    out: PathBuf,
}

fn load_for_eval(f: &CheckpointFlags) -> Result<Loaded> {
    let mut net = load_checkpoint(&f.checkpoint).map_err(|e| match e {
        Error::Io(io) => Error::Checkpoint(format!("{}: {io}", f.checkpoint.display())),
        other => other,
    })?;
    if let Some(p) = &f.norm_p {
        net = net.with_norm_p(parse_norm(p)?);
    }
    let mut cfg = match &f.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if f.mnist_dir.is_some() {
        cfg.mnist_dir = f.mnist_dir.clone();
    }
    let out = f
        .out
        .clone()
        .or_else(|| f.checkpoint.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    Ok(Loaded { net, cfg, out })
}

fn epsilons(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let eps = cfg.epsilons.clone().unwrap_or_else(|| crate::robustness::DEFAULT_EPSILONS.to_vec());
    if eps.is_empty() || eps.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::Config(format!("epsilons {eps:?} must be finite and ≥ 0")));
    }
    Ok(eps)
}

pub fn cmd_verify(f: &CheckpointFlags) -> Result<()> {
    let Loaded { net, cfg, out } = load_for_eval(f)?;
    let dataset = DatasetKind::from_input_dim(net.input_dim())?;
    let (train, _) = load_dataset(dataset, cfg.mnist_dir.as_deref())?;
    let mut search = SearchOptions { seed: f.seed.unwrap_or(0), ..SearchOptions::default() };
    if let Some(r) = cfg.restarts {
        search.restarts = r.max(1);
    }
    let report = verify(&net, &train.features, &search)?;
    std::fs::write(out.join("verification.json"), report.to_json())?;
    std::fs::write(out.join("spectrum.csv"), spectrum_csv(&report.spectrum))?;
    println!("K₂        {:.6}", report.k_upper);
    println!("K_{:<7} {:.6}", report.norm_p.to_string(), report.k_p);
    if let Some(t) = report.theory_lower {
        println!("theory    {t:.6}");
    }
    println!("L̂         {:.6}", report.empirical_lower);
    println!("K₂/L̂      {:.6}", report.tightness);
    Ok(())
}

pub fn cmd_attack(f: &CheckpointFlags) -> Result<()> {
    let Loaded { net, cfg, out } = load_for_eval(f)?;
    let dataset = DatasetKind::from_input_dim(net.input_dim())?;
    let (_, test) = load_dataset(dataset, cfg.mnist_dir.as_deref())?;
    let report = crate::robustness::attack_sweep(&net, &test, &epsilons(&cfg)?)?;
    report.write_csv(&out.join("attack.csv"))?;
    println!("clean error {:.2}%  K₂ {:.4}", report.clean_error_pct, report.k2);
    print!("{}", report.to_csv());
    Ok(())
}

pub fn cmd_certify(f: &CheckpointFlags) -> Result<()> {
    let Loaded { net, cfg, out } = load_for_eval(f)?;
    let dataset = DatasetKind::from_input_dim(net.input_dim())?;
    let (_, test) = load_dataset(dataset, cfg.mnist_dir.as_deref())?;
    let k2 = net.trivial_bound(Norm::L2);
    let m = margins(&net, &test);
    let mut s = String::from("epsilon,certified_error_pct\n");
    for e in epsilons(&cfg)? {
        s.push_str(&format!("{e},{}\n", certified_error_from_margins(&m, k2, e)));
    }
    std::fs::write(out.join("certify.csv"), &s)?;
    println!("K₂ {k2:.4}");
    print!("{s}");
    Ok(())
}
