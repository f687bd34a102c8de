//! Monte Carlo study of the estimators under hybrid censoring.
//!
//! Each replicate of each cell draws `n` lifetimes from the true law with a
//! generator seeded by `derive_seed(base_seed, [cell, replicate])`, applies
//! the scheme and fits every requested method. Replicates run in parallel and
//! are merged in index order, so the summary is independent of scheduling.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::censoring::{apply_scheme, reciprocals, HybridScheme};
use crate::distribution::IwParams;
use crate::error::{Error, Result};
use crate::lindley::{lindley_estimates, GammaPriors};
use crate::mle::{asymptotic_ci, fit_mle, SolverConfig};
use crate::posterior::{bayes_is, IsConfig};
use crate::seed;

/// One `(n, T, R)` design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub time: f64,
    pub big_r: usize,
}

impl Cell {
    pub fn scheme(&self) -> Result<HybridScheme> {
        HybridScheme::new(self.n, self.big_r, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mle,
    Lindley,
    Is,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Lindley => "lindley",
            Method::Is => "is",
        }
    }
}

fn default_level() -> f64 {
    0.95
}

fn default_draws() -> usize {
    1000
}

fn default_methods() -> Vec<Method> {
    vec![Method::Mle]
}

/// Design of a simulation study, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub true_alpha: f64,
    pub true_lambda: f64,
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub priors: Vec<GammaPriors>,
    pub replicates: usize,
    /// Importance-sampling draws per Bayes fit.
    #[serde(default = "default_draws")]
    pub draws: usize,
    pub base_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Coverage of the reported interval lengths.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        IwParams::from_rate(self.true_alpha, self.true_lambda)?;
        if self.replicates == 0 {
            return Err(Error::Input("replicates must be at least 1".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::Input("a study needs at least one cell".into()));
        }
        for cell in &self.cells {
            cell.scheme()?;
        }
        if self.methods.is_empty() {
            return Err(Error::Input("no methods requested".into()));
        }
        let bayes = self.methods.iter().any(|m| *m != Method::Mle);
        if bayes && self.priors.is_empty() {
            return Err(Error::Input("Bayes methods need at least one prior".into()));
        }
        if self.methods.contains(&Method::Is) && self.draws < 2 {
            return Err(Error::Input("importance sampling needs at least two draws".into()));
        }
        crate::error::ensure_probability_open("level", self.level)
    }
}

/// Estimates of one method on one replicate. `None` marks a failed fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub alpha: f64,
    pub lambda: f64,
    pub alpha_length: Option<f64>,
    pub lambda_length: Option<f64>,
}

/// Everything fitted on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub cell: usize,
    pub replicate: usize,
    /// Observed failures.
    pub r: usize,
    pub method: Method,
    /// Index into `StudyConfig::priors`; `None` for the MLE.
    pub prior: Option<usize>,
    pub estimates: Option<Estimates>,
}

/// Summary of one `(cell, method, prior, parameter)` combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub n: usize,
    pub time: f64,
    pub big_r: usize,
    pub method: Method,
    pub prior: Option<String>,
    pub parameter: String,
    pub truth: f64,
    pub average_estimate: f64,
    /// Monte Carlo standard error of `average_estimate`.
    pub se_average: f64,
    pub mse: f64,
    pub se_mse: f64,
    pub avg_interval_length: Option<f64>,
    pub se_interval_length: Option<f64>,
    pub replicates_used: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub rows: Vec<SummaryRow>,
    pub records: Vec<ReplicateRecord>,
}

/// Mean and standard error of the mean.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn run_replicate(config: &StudyConfig, truth: &IwParams, cell_idx: usize, rep: usize) -> Vec<ReplicateRecord> {
    let cell = config.cells[cell_idx];
    let mut rng = seed::rng_for(config.base_seed, &[cell_idx as u64, rep as u64]);
    let lifetimes = truth.sample_with(cell.n, &mut rng);
    let scheme = cell.scheme().expect("validated cell");
    let censored = apply_scheme(&lifetimes, &scheme).expect("valid lifetimes");
    let r = censored.r();

    let mut slots: Vec<(Method, Option<usize>)> = Vec::new();
    for method in &config.methods {
        match method {
            Method::Mle => slots.push((Method::Mle, None)),
            m => slots.extend((0..config.priors.len()).map(|p| (*m, Some(p)))),
        }
    }
    let record = |(method, prior): (Method, Option<usize>), estimates| ReplicateRecord {
        cell: cell_idx,
        replicate: rep,
        r,
        method,
        prior,
        estimates,
    };

    let fit = if r >= 2 {
        reciprocals(&censored)
            .ok()
            .and_then(|s| fit_mle(&s, &config.solver).ok().filter(|f| f.converged).map(|f| (s, f)))
    } else {
        None
    };
    let Some((sample, fit)) = fit else {
        return slots.into_iter().map(|slot| record(slot, None)).collect();
    };

    slots
        .into_iter()
        .map(|slot| {
            let estimates = match slot {
                (Method::Mle, _) => asymptotic_ci(&fit, config.level).ok().map(|ci| Estimates {
                    alpha: fit.alpha_hat,
                    lambda: fit.lambda_hat,
                    alpha_length: Some(ci.alpha.length()),
                    lambda_length: Some(ci.lambda.length()),
                }),
                (Method::Lindley, Some(p)) => lindley_estimates(&fit, &config.priors[p], &sample).ok().map(|e| {
                    Estimates { alpha: e.alpha_l, lambda: e.lambda_l, alpha_length: None, lambda_length: None }
                }),
                (Method::Is, Some(p)) => {
                    let is = IsConfig {
                        draws: config.draws,
                        seed: seed::derive_seed(config.base_seed, &[cell_idx as u64, rep as u64, 1 + p as u64]),
                        level: config.level,
                    };
                    bayes_is(&sample, &config.priors[p], &is).ok().map(|b| Estimates {
                        alpha: b.alpha.mean,
                        lambda: b.lambda.mean,
                        alpha_length: Some(b.alpha.hpd.length()),
                        lambda_length: Some(b.lambda.hpd.length()),
                    })
                }
                _ => None,
            };
            record(slot, estimates)
        })
        .collect()
}

/// Summarizes per-replicate records into table rows.
pub fn summarize(config: &StudyConfig, records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Method, Option<usize>)> = records.iter().map(|r| (r.cell, r.method, r.prior)).collect();
    keys.sort();
    keys.dedup();

    let mut rows = Vec::new();
    for (cell_idx, method, prior) in keys {
        let group: Vec<&ReplicateRecord> =
            records.iter().filter(|r| r.cell == cell_idx && r.method == method && r.prior == prior).collect();
        let ok: Vec<&Estimates> = group.iter().filter_map(|r| r.estimates.as_ref()).collect();
        let failures = group.len() - ok.len();
        let cell = config.cells[cell_idx];
        for (parameter, truth) in [("alpha", config.true_alpha), ("lambda", config.true_lambda)] {
            let pick = |e: &Estimates| if parameter == "alpha" { e.alpha } else { e.lambda };
            let est: Vec<f64> = ok.iter().map(|e| pick(e)).collect();
            let sq: Vec<f64> = est.iter().map(|v| (v - truth).powi(2)).collect();
            let lengths: Vec<f64> =
                ok.iter().filter_map(|e| if parameter == "alpha" { e.alpha_length } else { e.lambda_length }).collect();
            let (average_estimate, se_average) = if est.is_empty() { (f64::NAN, f64::NAN) } else { mean_and_se(&est) };
            let (mse, se_mse) = if sq.is_empty() { (f64::NAN, f64::NAN) } else { mean_and_se(&sq) };
            let (avg_interval_length, se_interval_length) = if lengths.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_and_se(&lengths);
                (Some(m), Some(s))
            };
            rows.push(SummaryRow {
                cell: cell_idx,
                n: cell.n,
                time: cell.time,
                big_r: cell.big_r,
                method,
                prior: prior.map(|p| config.priors[p].to_string()),
                parameter: parameter.to_string(),
                truth,
                average_estimate,
                se_average,
                mse,
                se_mse,
                avg_interval_length,
                se_interval_length,
                replicates_used: ok.len(),
                failures,
            });
        }
    }
    rows
}

/// Runs every replicate of every cell and summarizes them.
pub fn run_study(config: &StudyConfig) -> Result<SimulationSummary> {
    config.validate()?;
    let truth = IwParams::from_rate(config.true_alpha, config.true_lambda)?;
    let jobs: Vec<(usize, usize)> =
        (0..config.cells.len()).flat_map(|c| (0..config.replicates).map(move |r| (c, r))).collect();
    let records: Vec<ReplicateRecord> = jobs
        .par_iter()
        .map(|&(c, r)| run_replicate(config, &truth, c, r))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let rows = summarize(config, &records);
    Ok(SimulationSummary { rows, records })
}

/// Writes the summary rows as CSV.
pub fn write_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "n",
        "T",
        "R",
        "method",
        "prior",
        "parameter",
        "truth",
        "average_estimate",
        "se_average",
        "mse",
        "se_mse",
        "avg_interval_length",
        "se_interval_length",
        "replicates_used",
        "failures",
    ])
    .map_err(csv_error)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        w.write_record([
            row.n.to_string(),
            row.time.to_string(),
            row.big_r.to_string(),
            row.method.label().to_string(),
            row.prior.clone().unwrap_or_default(),
            row.parameter.clone(),
            row.truth.to_string(),
            row.average_estimate.to_string(),
            row.se_average.to_string(),
            row.mse.to_string(),
            row.se_mse.to_string(),
            opt(row.avg_interval_length),
            opt(row.se_interval_length),
            row.replicates_used.to_string(),
            row.failures.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Input(format!("cannot write CSV: {e}")))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Input(format!("cannot write CSV: {e}"))
}

/// Aligned text table: one line per cell and method, with A.E, MSE and
/// interval length for both parameters.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:>4} {:>6} {:>4}  {:<8} {:<8} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>5}\n",
        "n", "T", "R", "method", "prior", "AE(a)", "MSE(a)", "len(a)", "AE(l)", "MSE(l)", "len(l)", "fail"
    );
    out.push_str(&"-".repeat(out.len() - 1));
    out.push('\n');
    let len = |v: Option<f64>| v.map(|x| format!("{x:>8.4}")).unwrap_or_else(|| format!("{:>8}", "-"));
    for pair in rows.chunks(2) {
        let [a, l] = pair else { continue };
        out.push_str(&format!(
            "{:>4} {:>6} {:>4}  {:<8} {:<8} | {:>8.4} {:>8.4} {} | {:>8.4} {:>8.4} {} | {:>5}\n",
            a.n,
            a.time,
            a.big_r,
            a.method.label(),
            a.prior.as_deref().unwrap_or("-"),
            a.average_estimate,
            a.mse,
            len(a.avg_interval_length),
            l.average_estimate,
            l.mse,
            len(l.avg_interval_length),
            a.failures,
        ));
    }
    out
}
