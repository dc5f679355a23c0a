//! Ensemble summaries: mean ± std per table row, as markdown and CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{ModelKind, Preset, RunSpec};
use super::run::RunResult;
use crate::error::Result;
use crate::linalg::Norm;
use crate::training::PenaltyKind;

/// Mean and sample standard deviation (0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }

    fn show(&self, digits: usize) -> String {
        if self.mean.is_nan() {
            "–".into()
        } else {
            format!("{:.*} ± {:.*}", digits, self.mean, digits, self.std)
        }
    }

    fn show_pct(&self) -> String {
        if self.mean.is_nan() {
            "–".into()
        } else {
            format!("{:.2} ± {:.2}%", 100.0 * self.mean, 100.0 * self.std)
        }
    }
}

/// Aggregated metrics for one table row.
#[derive(Debug, Clone, Serialize)]
pub struct RowSummary {
    pub name: String,
    pub label: String,
    pub seeds: Vec<u64>,
    /// Trivial bound in the row's own norm.
    pub k: Stat,
    pub k2: Stat,
    pub empirical_lower: Stat,
    /// `K₂ / L̂`.
    pub tightness: Stat,
    /// `K₂ / (√2·κ(W₁))`, the guaranteed lower bound of a two-layer network.
    pub k_over_kappa: Stat,
    pub train_nll: Stat,
    pub test_nll: Stat,
    pub train_acc: Stat,
    pub test_acc: Stat,
    pub epsilons: Vec<f64>,
    pub empirical_error_pct: Vec<Stat>,
    pub certified_error_pct: Vec<Stat>,
}

/// Table name of a row within its preset.
pub fn row_name(preset: Option<Preset>, spec: &RunSpec) -> String {
    match preset {
        Some(Preset::Iris | Preset::Mnist) => format!("λ = {}", spec.lambda),
        Some(Preset::Activations) => spec.activation.id().to_string(),
        Some(Preset::PnormInf | Preset::Pnorm1) => format!("{}, λ = {}", spec.activation.id(), spec.lambda),
        Some(Preset::Penalties) => match spec.penalty {
            PenaltyKind::Frobenius => "Frobenius".into(),
            PenaltyKind::N24 => "N24".into(),
            PenaltyKind::Y17 => "Y17".into(),
            PenaltyKind::TrivialProduct => "trivial product".into(),
            PenaltyKind::None => "none".into(),
        },
        Some(Preset::W23) => match spec.model {
            ModelKind::W23 => "W23".into(),
            ModelKind::NormBall => "Ours".into(),
            ModelKind::Direct => spec.label(),
        },
        None => spec.label(),
    }
}

pub fn summarize(preset: Option<Preset>, results: &[RunResult]) -> Vec<RowSummary> {
    let mut rows: Vec<usize> = results.iter().map(|r| r.row).collect();
    rows.dedup();
    rows.into_iter()
        .map(|row| {
            let rs: Vec<&RunResult> = results.iter().filter(|r| r.row == row).collect();
            let spec = &rs[0].spec;
            let col = |f: &dyn Fn(&RunResult) -> Option<f64>| -> Stat {
                Stat::of(&rs.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let epsilons = rs[0].attack.as_ref().map(|a| a.epsilons.clone()).unwrap_or_default();
            let per_eps = |pick: fn(&crate::robustness::AttackReport) -> &Vec<f64>| -> Vec<Stat> {
                (0..epsilons.len())
                    .map(|i| col(&|r| r.attack.as_ref().map(|a| pick(a)[i])))
                    .collect()
            };
            RowSummary {
                name: row_name(preset, spec),
                label: spec.label(),
                seeds: rs.iter().map(|r| r.seed).collect(),
                k: col(&|r| Some(r.network.trivial_bound(r.network.norm_p()))),
                k2: col(&|r| Some(r.network.trivial_bound(Norm::L2))),
                empirical_lower: col(&|r| r.verification.as_ref().map(|v| v.empirical_lower)),
                tightness: col(&|r| r.verification.as_ref().map(|v| v.tightness)),
                k_over_kappa: col(&|r| {
                    let v = r.verification.as_ref()?;
                    (v.condition_numbers.len() == 2)
                        .then(|| v.condition_numbers[0].map(|c| v.k_upper / (std::f64::consts::SQRT_2 * c)))
                        .flatten()
                }),
                train_nll: col(&|r| Some(r.train_nll)),
                test_nll: col(&|r| Some(r.test_nll)),
                train_acc: col(&|r| Some(r.train_acc)),
                test_acc: col(&|r| Some(r.test_acc)),
                empirical_error_pct: per_eps(|a| &a.empirical_error_pct),
                certified_error_pct: per_eps(|a| &a.certified_error_pct),
                epsilons,
            }
        })
        .collect()
}

type Column = (&'static str, fn(&RowSummary) -> String);

fn columns(preset: Option<Preset>, verified: bool) -> Vec<Column> {
    let k: Column = ("K", |r| r.k.show(2));
    let k2: Column = ("K₂", |r| r.k2.show(2));
    let lhat: Column = ("L̂", |r| r.empirical_lower.show(2));
    let tight: Column = ("K/L̂", |r| r.tightness.show(2));
    let kk: Column = ("K/(√2κ(W))", |r| r.k_over_kappa.show(2));
    let trn: Column = ("Train NLL", |r| r.train_nll.show(4));
    let ten: Column = ("Test NLL", |r| r.test_nll.show(4));
    let tra: Column = ("Train Acc", |r| r.train_acc.show_pct());
    let tea: Column = ("Test Acc", |r| r.test_acc.show_pct());
    if !verified {
        return vec![k, trn, ten, tra, tea];
    }
    match preset {
        Some(Preset::Iris) => vec![
            ("Train Loss", |r| r.train_nll.show(4)),
            ("Test Loss", |r| r.test_nll.show(4)),
            ("Train Acc", |r| format!("{:.3}", r.train_acc.mean)),
            ("Test Acc", |r| format!("{:.3}", r.test_acc.mean)),
            k,
            kk,
            lhat,
            tight,
        ],
        Some(Preset::Mnist | Preset::Activations | Preset::Penalties) => vec![k, lhat, tight, trn, ten, tea],
        Some(Preset::PnormInf | Preset::Pnorm1) => {
            vec![("K_p", |r| r.k.show(2)), k2, lhat, ("K₂/L̂", |r| r.tightness.show(2)), trn, ten, tra, tea]
        }
        Some(Preset::W23) => vec![trn, ten, tra, tea],
        None => vec![k, k2, lhat, tight, trn, ten, tra, tea],
    }
}

fn header(out: &mut String, first: &str, names: &[String]) {
    let _ = writeln!(out, "| {first} | {} |", names.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(names.len()));
}

/// Markdown tables: the main metrics table, then PGD and certified error by ε.
pub fn markdown(title: &str, preset: Option<Preset>, rows: &[RowSummary]) -> String {
    let verified = rows.iter().any(|r| r.tightness.n > 0);
    let cols = columns(preset, verified);
    let first = if preset == Some(Preset::W23) { "Model" } else { "Run" };
    let mut s = format!("# {title}\n\nMean ± standard deviation over seeds.\n\n");
    header(&mut s, first, &cols.iter().map(|c| c.0.to_string()).collect::<Vec<_>>());
    for r in rows {
        let cells: Vec<String> = cols.iter().map(|c| (c.1)(r)).collect();
        let _ = writeln!(s, "| {} | {} |", r.name, cells.join(" | "));
    }
    let Some(eps) = rows.iter().find(|r| !r.epsilons.is_empty()).map(|r| r.epsilons.clone()) else {
        return s;
    };
    let eps_names: Vec<String> = eps.iter().map(|e| format!("ε = {e}")).collect();
    for (what, pick) in [
        ("PGD error (%)", (|r: &RowSummary| r.empirical_error_pct.clone()) as fn(&RowSummary) -> Vec<Stat>),
        ("Certified error (%)", |r: &RowSummary| r.certified_error_pct.clone()),
    ] {
        let _ = writeln!(s, "\n## {what}\n");
        header(&mut s, first, &eps_names);
        for r in rows {
            let cells: Vec<String> = pick(r).iter().map(|v| v.show(2)).collect();
            let _ = writeln!(s, "| {} | {} |", r.name, cells.join(" | "));
        }
    }
    s
}

/// Long-format CSV: `row,label,metric,mean,std,n`.
pub fn csv(rows: &[RowSummary]) -> String {
    let mut s = String::from("row,label,metric,mean,std,n\n");
    for r in rows {
        let mut put = |metric: String, v: &Stat| {
            if v.n > 0 {
                let _ = writeln!(s, "{},{},{metric},{},{},{}", r.name.replace(',', ";"), r.label, v.mean, v.std, v.n);
            }
        };
        put("K".into(), &r.k);
        put("K2".into(), &r.k2);
        put("empirical_lower".into(), &r.empirical_lower);
        put("tightness".into(), &r.tightness);
        put("k_over_sqrt2_kappa".into(), &r.k_over_kappa);
        put("train_nll".into(), &r.train_nll);
        put("test_nll".into(), &r.test_nll);
        put("train_acc".into(), &r.train_acc);
        put("test_acc".into(), &r.test_acc);
        for (i, e) in r.epsilons.iter().enumerate() {
            put(format!("empirical_error_pct@{e}"), &r.empirical_error_pct[i]);
            put(format!("certified_error_pct@{e}"), &r.certified_error_pct[i]);
        }
    }
    s
}

pub fn write_summary(out: &Path, title: &str, preset: Option<Preset>, rows: &[RowSummary]) -> Result<()> {
    std::fs::write(out.join("summary.md"), markdown(title, preset, rows))?;
    std::fs::write(out.join("summary.csv"), csv(rows))?;
    Ok(())
}
