mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use iwhc::censoring::{apply_scheme, reciprocals, HybridSample, HybridScheme, ReciprocalSample};
use iwhc::datasets;
use iwhc::gof::{ecdf_table, ks_test};
use iwhc::harness::{render_table, run_study, write_csv, StudyConfig};
use iwhc::lindley::{GammaPriors, LindleyWorkspace};
use iwhc::mle::{asymptotic_ci, fit_mle, ConfidenceInterval, MleFit, SolverConfig};
use iwhc::posterior::{bayes_is, BayesEstimate, IsConfig};
use iwhc::IwParams;

use report::{CensoringDigest, InputDigest, RunReport};

#[derive(Parser)]
#[command(name = "iwhc", version, about = "Inverse Weibull inference under Type-I hybrid censoring")]
struct Cli {
    /// Emit a versioned JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum likelihood fit with asymptotic confidence intervals.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Confidence level.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Bayes estimates under gamma priors.
    Bayes {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t = BayesMethod::Is)]
        method: BayesMethod,
        /// Gamma hyperparameters a,b,c,d for alpha ~ G(a,b), lambda ~ G(c,d).
        #[arg(long, default_value = "0,0,0,0", allow_hyphen_values = true)]
        prior: GammaPriors,
        /// Importance-sampling draws.
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long, env = "IWHC_SEED", default_value_t = 42)]
        seed: u64,
        /// Credible level of the HPD intervals.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Drop the likelihood-curvature terms of Lindley's approximation.
        #[arg(long, hide = true)]
        no_curvature: bool,
    },
    /// Apply a censoring scheme and list the observed failures.
    Censor {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Kolmogorov-Smirnov test of a complete sample against the fitted law.
    Gof {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Test against this shape instead of the MLE (needs --theta).
        #[arg(long, requires = "theta")]
        alpha: Option<f64>,
        /// Test against this scale instead of the MLE (needs --alpha).
        #[arg(long, requires = "alpha")]
        theta: Option<f64>,
        /// Also print (x, empirical cdf, fitted cdf) rows.
        #[arg(long)]
        ecdf: bool,
    },
    /// Run a Monte Carlo study described by a TOML file.
    Simulate {
        config: PathBuf,
        /// Override the number of replicates.
        #[arg(long)]
        replicates: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the summary rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write every per-replicate record as JSON.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Whitespace-separated lifetimes; lines starting with '#' are ignored.
    #[arg(required_unless_present = "dataset", conflicts_with = "dataset")]
    file: Option<PathBuf>,
    /// Use a bundled data set: flood or guinea-pig.
    #[arg(long)]
    dataset: Option<String>,
}

#[derive(Args)]
struct SchemeArgs {
    /// Failure budget R (needs --time).
    #[arg(long, requires = "time")]
    big_r: Option<usize>,
    /// Time budget T (needs --big-r).
    #[arg(long, requires = "big_r")]
    time: Option<f64>,
}

#[derive(Args)]
struct SolverArgs {
    /// Convergence threshold on the score.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig { tolerance: self.tolerance, max_iterations: self.max_iterations }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BayesMethod {
    Lindley,
    Is,
}

struct Loaded {
    lifetimes: Vec<f64>,
    source: String,
}

fn load(data: &DataArgs) -> Result<Loaded> {
    if let Some(name) = &data.dataset {
        let values = datasets::bundled(name).with_context(|| {
            format!("unknown data set {name:?}; bundled sets are {}", datasets::BUNDLED_NAMES.join(", "))
        })?;
        return Ok(Loaded { lifetimes: values.to_vec(), source: format!("bundled:{name}") });
    }
    let path = data.file.as_ref().expect("clap enforces a data source");
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let lifetimes = datasets::parse_lifetimes(&text).with_context(|| format!("in {}", path.display()))?;
    Ok(Loaded { lifetimes, source: path.display().to_string() })
}

fn censor(loaded: &Loaded, scheme: &SchemeArgs) -> Result<HybridSample> {
    let n = loaded.lifetimes.len();
    let plan = match (scheme.big_r, scheme.time) {
        (Some(r), Some(t)) => HybridScheme::new(n, r, t)?,
        (None, None) => HybridScheme::complete(n)?,
        _ => bail!("--big-r and --time must be given together"),
    };
    Ok(apply_scheme(&loaded.lifetimes, &plan)?)
}

fn digest(loaded: &Loaded, scheme: &SchemeArgs, sample: &HybridSample) -> InputDigest {
    let min = loaded.lifetimes.iter().copied().fold(f64::INFINITY, f64::min);
    let max = loaded.lifetimes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    InputDigest {
        source: loaded.source.clone(),
        count: loaded.lifetimes.len(),
        min,
        max,
        censoring: CensoringDigest {
            n: sample.n(),
            big_r: scheme.big_r,
            time: scheme.time,
            r: sample.r(),
            u: sample.u(),
            complete: sample.is_complete(),
        },
    }
}

fn interval(ci: &ConfidenceInterval) -> serde_json::Value {
    json!({ "lower": ci.lower, "upper": ci.upper, "level": ci.level })
}

fn fit_json(fit: &MleFit) -> serde_json::Value {
    json!({
        "alpha": fit.alpha_hat,
        "lambda": fit.lambda_hat,
        "theta": fit.theta_hat,
        "loglik": fit.loglik,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "grad_norm": fit.grad_norm,
        "covariance": { "alpha_alpha": fit.cov.v11, "alpha_lambda": fit.cov.v12, "lambda_lambda": fit.cov.v22 },
    })
}

fn print_header(input: &InputDigest) {
    let c = &input.censoring;
    println!("data: {} ({} values, range {}..{})", input.source, input.count, input.min, input.max);
    match (c.big_r, c.time) {
        (Some(r), Some(t)) => println!("scheme: n={} R={} T={}  ->  r={} u={}", c.n, r, t, c.r, c.u),
        _ => println!("scheme: complete sample, n={}", c.n),
    }
}

fn cmd_fit(data: &DataArgs, scheme: &SchemeArgs, solver: &SolverArgs, level: f64, json_out: bool) -> Result<()> {
    let loaded = load(data)?;
    let sample = censor(&loaded, scheme)?;
    let rs = reciprocals(&sample)?;
    let fit = fit_mle(&rs, &solver.config())?;
    let ci = asymptotic_ci(&fit, level)?;
    let input = digest(&loaded, scheme, &sample);
    if json_out {
        let method = json!({ "name": "mle", "solver": solver.config(), "level": level });
        let mut results = fit_json(&fit);
        results["intervals"] =
            json!({ "alpha": interval(&ci.alpha), "lambda": interval(&ci.lambda), "theta": interval(&ci.theta) });
        println!("{}", serde_json::to_string_pretty(&RunReport::new("fit", Some(input), method, results))?);
        return Ok(());
    }
    print_header(&input);
    println!("maximum likelihood ({} iterations, |score| = {:.2e})", fit.iterations, fit.grad_norm);
    println!("log-likelihood: {:.6}", fit.loglik);
    println!("{:<8} {:>12}   {:.0}% interval", "param", "estimate", level * 100.0);
    for (name, est, ci) in
        [("alpha", fit.alpha_hat, ci.alpha), ("lambda", fit.lambda_hat, ci.lambda), ("theta", fit.theta_hat, ci.theta)]
    {
        println!("{name:<8} {est:>12.6}   ({:.6}, {:.6})", ci.lower, ci.upper);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bayes(
    data: &DataArgs,
    scheme: &SchemeArgs,
    solver: &SolverArgs,
    method: BayesMethod,
    prior: GammaPriors,
    draws: usize,
    seed: u64,
    level: f64,
    no_curvature: bool,
    json_out: bool,
) -> Result<()> {
    let loaded = load(data)?;
    let sample = censor(&loaded, scheme)?;
    let rs = reciprocals(&sample)?;
    let input = digest(&loaded, scheme, &sample);
    match method {
        BayesMethod::Lindley => cmd_lindley(&rs, input, solver, prior, no_curvature, json_out),
        BayesMethod::Is => {
            let config = IsConfig { draws, seed, level };
            let result = bayes_is(&rs, &prior, &config)?;
            let mut warnings = Vec::new();
            if result.effective_sample_size < 0.1 * draws as f64 {
                warnings.push(format!(
                    "effective sample size {:.0} is below 10% of the {draws} draws",
                    result.effective_sample_size
                ));
            }
            if json_out {
                let est =
                    |e: &BayesEstimate| json!({ "mean": e.mean, "variance": e.variance, "hpd": interval(&e.hpd) });
                let method =
                    json!({ "name": "is", "prior": prior.to_string(), "draws": draws, "seed": seed, "level": level });
                let results = json!({
                    "alpha": est(&result.alpha),
                    "lambda": est(&result.lambda),
                    "theta": est(&result.theta),
                    "effective_sample_size": result.effective_sample_size,
                    "acceptance_ratio": result.acceptance_ratio,
                });
                let mut report = RunReport::new("bayes", Some(input), method, results);
                report.warnings = warnings;
                println!("{}", serde_json::to_string_pretty(&report)?);
                return Ok(());
            }
            print_header(&input);
            println!("importance sampling: prior {prior}, M={draws}, seed={seed}");
            println!(
                "effective sample size {:.1}, acceptance ratio {:.3}",
                result.effective_sample_size, result.acceptance_ratio
            );
            println!("{:<8} {:>12} {:>12}   {:.0}% HPD", "param", "mean", "variance", level * 100.0);
            for (name, e) in [("alpha", result.alpha), ("lambda", result.lambda), ("theta", result.theta)] {
                println!("{name:<8} {:>12.6} {:>12.4e}   ({:.6}, {:.6})", e.mean, e.variance, e.hpd.lower, e.hpd.upper);
            }
            for w in warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
    }
}

fn cmd_lindley(
    rs: &ReciprocalSample,
    input: InputDigest,
    solver: &SolverArgs,
    prior: GammaPriors,
    no_curvature: bool,
    json_out: bool,
) -> Result<()> {
    let fit = fit_mle(rs, &solver.config())?;
    let mut workspace = LindleyWorkspace::new(&fit, &prior, rs)?;
    if no_curvature {
        workspace = workspace.without_curvature();
    }
    let est = workspace.estimate()?;
    if json_out {
        let method = json!({ "name": "lindley", "prior": prior.to_string(), "solver": solver.config(), "curvature": !no_curvature });
        let results = json!({
            "alpha": est.alpha_l,
            "lambda": est.lambda_l,
            "theta": est.theta_l,
            "mle": fit_json(&fit),
            "workspace": workspace,
        });
        println!("{}", serde_json::to_string_pretty(&RunReport::new("bayes", Some(input), method, results))?);
        return Ok(());
    }
    print_header(&input);
    println!("Lindley approximation: prior {prior}{}", if no_curvature { " (curvature terms off)" } else { "" });
    println!("{:<8} {:>12} {:>12}", "param", "bayes", "mle");
    println!("{:<8} {:>12.6} {:>12.6}", "alpha", est.alpha_l, fit.alpha_hat);
    println!("{:<8} {:>12.6} {:>12.6}", "lambda", est.lambda_l, fit.lambda_hat);
    println!("{:<8} {:>12.6} {:>12.6}", "theta", est.theta_l, fit.theta_hat);
    Ok(())
}

fn cmd_censor(data: &DataArgs, scheme: &SchemeArgs, json_out: bool) -> Result<()> {
    let loaded = load(data)?;
    let sample = censor(&loaded, scheme)?;
    let input = digest(&loaded, scheme, &sample);
    if json_out {
        let results = json!({ "times": sample.times(), "r": sample.r(), "u": sample.u(), "stopped_by_failures": sample.stopped_by_failures() });
        println!("{}", serde_json::to_string_pretty(&RunReport::new("censor", Some(input), json!({}), results))?);
        return Ok(());
    }
    print_header(&input);
    let stop = if sample.stopped_by_failures() { "R-th failure" } else { "time budget" };
    println!("stopped at u={} ({stop}); {} unit(s) censored", sample.u(), sample.n() - sample.r());
    let listing: Vec<String> = sample.times().iter().map(|t| t.to_string()).collect();
    println!("{}", listing.join(" "));
    Ok(())
}

fn cmd_gof(
    data: &DataArgs,
    solver: &SolverArgs,
    alpha: Option<f64>,
    theta: Option<f64>,
    ecdf: bool,
    json_out: bool,
) -> Result<()> {
    let loaded = load(data)?;
    let complete = SchemeArgs { big_r: None, time: None };
    let sample = censor(&loaded, &complete)?;
    let (params, origin) = match (alpha, theta) {
        (Some(a), Some(t)) => (IwParams::from_scale(a, t)?, "given"),
        _ => {
            let fit = fit_mle(&reciprocals(&sample)?, &solver.config())?;
            (IwParams::from_rate(fit.alpha_hat, fit.lambda_hat)?, "mle")
        }
    };
    let ks = ks_test(&loaded.lifetimes, &params)?;
    let rows = if ecdf { Some(ecdf_table(&loaded.lifetimes, &params)?) } else { None };
    let input = digest(&loaded, &complete, &sample);
    if json_out {
        let method = json!({
            "name": "kolmogorov-smirnov",
            "parameters": origin,
            "p_value": "asymptotic Kolmogorov series, no small-sample correction",
        });
        let mut results = json!({
            "alpha": params.alpha(), "theta": params.theta(), "lambda": params.lambda(),
            "statistic": ks.statistic, "p_value": ks.p_value, "n": ks.n,
        });
        if let Some(rows) = &rows {
            results["ecdf"] = serde_json::to_value(rows)?;
        }
        println!("{}", serde_json::to_string_pretty(&RunReport::new("gof", Some(input), method, results))?);
        return Ok(());
    }
    print_header(&input);
    println!("fitted law ({origin}): alpha={:.6} theta={:.6}", params.alpha(), params.theta());
    println!("K-S distance D = {:.6}, p-value = {:.6} (asymptotic)", ks.statistic, ks.p_value);
    if let Some(rows) = rows {
        println!("{:>12} {:>10} {:>10}", "x", "empirical", "fitted");
        for r in rows {
            println!("{:>12} {:>10.6} {:>10.6}", r.x, r.empirical, r.fitted);
        }
    }
    Ok(())
}

fn cmd_simulate(
    path: &PathBuf,
    replicates: Option<usize>,
    seed: Option<u64>,
    csv: Option<&PathBuf>,
    records: Option<&PathBuf>,
    json_out: bool,
) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut config: StudyConfig =
        toml::from_str(&text).with_context(|| format!("invalid study config {}", path.display()))?;
    if let Some(r) = replicates {
        config.replicates = r;
    }
    if let Some(s) = seed {
        config.base_seed = s;
    }
    let summary = run_study(&config)?;
    if let Some(out) = csv {
        let file = std::fs::File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
        write_csv(&summary.rows, file)?;
    }
    if let Some(out) = records {
        std::fs::write(out, serde_json::to_string(&summary.records)?)
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    if json_out {
        let method = serde_json::to_value(&config)?;
        let results = json!({ "rows": summary.rows });
        println!("{}", serde_json::to_string_pretty(&RunReport::new("simulate", None, method, results))?);
        return Ok(());
    }
    println!(
        "true alpha={} lambda={}, {} replicates per cell, base seed {}",
        config.true_alpha, config.true_lambda, config.replicates, config.base_seed
    );
    print!("{}", render_table(&summary.rows));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let json_out = cli.json;
    match &cli.command {
        Command::Fit { data, scheme, solver, level } => cmd_fit(data, scheme, solver, *level, json_out),
        Command::Bayes { data, scheme, solver, method, prior, draws, seed, level, no_curvature } => {
            cmd_bayes(data, scheme, solver, *method, *prior, *draws, *seed, *level, *no_curvature, json_out)
        }
        Command::Censor { data, scheme } => cmd_censor(data, scheme, json_out),
        Command::Gof { data, solver, alpha, theta, ecdf } => cmd_gof(data, solver, *alpha, *theta, *ecdf, json_out),
        Command::Simulate { config, replicates, seed, csv, records } => {
            cmd_simulate(config, *replicates, *seed, csv.as_ref(), records.as_ref(), json_out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
