//! Oracle suites shared by the dedicated tests and the acceptance runner.

use iwhc::lindley::{lindley_estimates, third_derivatives, GammaPriors};
use iwhc::mle::{fit_mle, log_likelihood, observed_fisher, score, SolverConfig};
use iwhc::posterior::{bayes_is, IsConfig};
use iwhc::IwParams;
use rand::Rng;

use super::{derivative, quadrature_posterior_means, random_instance, relative_error, rng, TimeData};

/// Largest relative errors of the analytic derivatives against finite differences.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeReport {
    pub score: f64,
    pub hessian: f64,
    pub third: f64,
}

/// Components are compared relative to their own magnitude, floored at 1e-3
/// of the largest component of the same tensor so that entries that happen
/// to be near zero are not judged on pure roundoff.
pub fn derivative_suite(seed: u64) -> DerivativeReport {
    let mut g = rng(seed);
    let mut report = DerivativeReport { score: 0.0, hessian: 0.0, third: 0.0 };
    for i in 0..100 {
        let (d, alpha0, lambda0) = random_instance(&mut g, 1);
        let alpha = alpha0 * g.random_range(-0.3..0.3f64).exp();
        let lambda = lambda0 * g.random_range(-0.3..0.3f64).exp();
        let s = d.reciprocal();
        let (ha, hl) = (1e-4 * alpha, 1e-4 * lambda);

        let sc = score(alpha, lambda, &s).unwrap();
        let fd_a = derivative(|a| log_likelihood(a, lambda, &s).unwrap(), alpha, ha);
        let fd_l = derivative(|l| log_likelihood(alpha, l, &s).unwrap(), lambda, hl);
        let floor = 1e-3 * sc.d_alpha.abs().max(sc.d_lambda.abs());
        report.score =
            report.score.max(relative_error(fd_a, sc.d_alpha, floor)).max(relative_error(fd_l, sc.d_lambda, floor));

        let h = observed_fisher(alpha, lambda, &s).unwrap();
        let fd_aa = derivative(|a| score(a, lambda, &s).unwrap().d_alpha, alpha, ha);
        let fd_al = derivative(|l| score(alpha, l, &s).unwrap().d_alpha, lambda, hl);
        let fd_la = derivative(|a| score(a, lambda, &s).unwrap().d_lambda, alpha, ha);
        let fd_ll = derivative(|l| score(alpha, l, &s).unwrap().d_lambda, lambda, hl);
        let floor = 1e-3 * h.d2_aa.abs().max(h.d2_al.abs()).max(h.d2_ll.abs());
        for (fd, exact) in [(fd_aa, h.d2_aa), (fd_al, h.d2_al), (fd_la, h.d2_al), (fd_ll, h.d2_ll)] {
            report.hessian = report.hessian.max(relative_error(fd, exact, floor));
        }

        if i < 50 {
            let t = third_derivatives(alpha, lambda, &s).unwrap();
            let fisher = |a: f64, l: f64| observed_fisher(a, l, &s).unwrap();
            let fd_30 = derivative(|a| fisher(a, lambda).d2_aa, alpha, ha);
            let fd_21 = derivative(|l| fisher(alpha, l).d2_aa, lambda, hl);
            let fd_21b = derivative(|a| fisher(a, lambda).d2_al, alpha, ha);
            let fd_12 = derivative(|l| fisher(alpha, l).d2_al, lambda, hl);
            let fd_12b = derivative(|a| fisher(a, lambda).d2_ll, alpha, ha);
            let fd_03 = derivative(|l| fisher(alpha, l).d2_ll, lambda, hl);
            let floor = 1e-3 * t.l30.abs().max(t.l21.abs()).max(t.l12.abs()).max(t.l03.abs());
            for (fd, exact) in
                [(fd_30, t.l30), (fd_21, t.l21), (fd_21b, t.l21), (fd_12, t.l12), (fd_12b, t.l12), (fd_03, t.l03)]
            {
                report.third = report.third.max(relative_error(fd, exact, floor));
            }
        }
    }
    report
}

/// One posterior-oracle comparison.
#[derive(Debug, Clone)]
pub struct PosteriorCase {
    pub name: &'static str,
    pub quad: (f64, f64),
    pub is: (f64, f64),
    pub lindley: (f64, f64),
}

impl PosteriorCase {
    pub fn is_error(&self) -> f64 {
        ((self.is.0 - self.quad.0) / self.quad.0).abs().max(((self.is.1 - self.quad.1) / self.quad.1).abs())
    }

    pub fn lindley_error(&self) -> f64 {
        ((self.lindley.0 - self.quad.0) / self.quad.0).abs().max(((self.lindley.1 - self.quad.1) / self.quad.1).abs())
    }
}

/// The three small data sets of the posterior oracle suite.
pub fn posterior_datasets() -> Vec<(&'static str, TimeData, GammaPriors)> {
    let law = IwParams::from_rate(2.0, 1.0).unwrap();
    let simulated = law.sample(15, 2024).unwrap();
    let law2 = IwParams::from_rate(1.5, 2.0).unwrap();
    let simulated2 = law2.sample(14, 31).unwrap();
    let law3 = IwParams::from_rate(3.0, 0.5).unwrap();
    let simulated3 = law3.sample(15, 77).unwrap();
    vec![
        ("iw(2,1) n=15 R=12 T=3, prior 2", TimeData::censor(&simulated, 12, 3.0), GammaPriors::INFORMATIVE),
        ("iw(1.5,2) n=14 R=11 T=5, prior 1", TimeData::censor(&simulated2, 11, 5.0), GammaPriors::NON_INFORMATIVE),
        (
            "iw(3,0.5) n=15 complete, prior 2",
            TimeData::censor(&simulated3, 15, f64::INFINITY),
            GammaPriors::INFORMATIVE,
        ),
    ]
}

pub fn posterior_suite(draws: usize, seed: u64) -> Vec<PosteriorCase> {
    posterior_datasets()
        .into_iter()
        .map(|(name, d, p)| {
            let quad = quadrature_posterior_means(&d, &p);
            let s = d.reciprocal();
            let is = bayes_is(&s, &p, &IsConfig { draws, seed, level: 0.95 }).unwrap();
            let fit = fit_mle(&s, &SolverConfig::default()).unwrap();
            let l = lindley_estimates(&fit, &p, &s).unwrap();
            PosteriorCase { name, quad, is: (is.alpha.mean, is.lambda.mean), lindley: (l.alpha_l, l.lambda_l) }
        })
        .collect()
}

/// Deterministic battery of every property check, for the acceptance runner.
/// Returns `(property, failures, cases)`.
pub fn property_battery(seed: u64) -> Vec<(&'static str, usize, usize)> {
    use super::checks::*;
    use iwhc::harness::{run_study, Cell, Method, StudyConfig};

    let mut g = rng(seed);
    let mut out = Vec::new();
    let mut tally = |name: &'static str, results: Vec<Check>| {
        let failures = results.iter().filter(|r| r.is_err()).count();
        if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
            println!("    {name}: {e}");
        }
        out.push((name, failures, results.len()));
    };

    let cases: Vec<Check> = (0..1000)
        .map(|_| {
            let n = g.random_range(1..40);
            let mut lifetimes: Vec<f64> = (0..n).map(|_| g.random_range(0.01..5.0f64)).collect();
            // Force some ties.
            if n > 3 {
                lifetimes[1] = lifetimes[0];
            }
            let big_r = g.random_range(1..=n);
            let time = if g.random_bool(0.1) { lifetimes[g.random_range(0..n)] } else { g.random_range(0.01..5.0) };
            censoring(&lifetimes, big_r, time)
        })
        .collect();
    tally("censoring scheme", cases);

    let cases = (0..1000)
        .map(|_| round_trips(g.random_range(0.1..20.0), g.random_range(0.01..100.0), g.random_range(1e-6..0.999_999)))
        .collect();
    tally("parameter and quantile round trips", cases);

    let cases = (0..20)
        .map(|i| {
            let (d, _, _) = random_instance(&mut g, 2);
            let p = if i % 2 == 0 { GammaPriors::INFORMATIVE } else { GammaPriors::NON_INFORMATIVE };
            log_concavity(&d, &p)
        })
        .collect();
    tally("g2 log-concavity grid", cases);

    let cases = (0..200)
        .map(|_| {
            let m = g.random_range(1..500);
            let lw: Vec<f64> = (0..m).map(|_| g.random_range(-700.0..0.0)).collect();
            weight_normalization(&lw)
        })
        .collect();
    tally("weight normalization", cases);

    let weighted = |g: &mut rand_chacha::ChaCha20Rng| {
        let m = g.random_range(3..200);
        let values: Vec<f64> = (0..m).map(|_| g.random_range(-5.0..5.0f64).round()).collect();
        let weights: Vec<f64> = (0..m).map(|_| g.random_range(0.0..1.0)).collect();
        (values, weights)
    };
    let cases = (0..200)
        .map(|_| {
            let (v, w) = weighted(&mut g);
            let betas: Vec<f64> = (0..20).map(|_| g.random_range(0.0..=1.0)).collect();
            quantile_monotone(&v, &w, &betas)
        })
        .collect();
    tally("weighted quantile monotonicity", cases);

    let cases = (0..200)
        .map(|_| {
            let (v, w) = weighted(&mut g);
            let level = g.random_range(0.5..0.99);
            if (v.len() as f64) * level < 2.0 {
                return Ok(());
            }
            hpd_exhaustive(&v, &w, level)
        })
        .collect();
    tally("HPD shortest among all windows", cases);

    let cases = (0..10).map(|_| pdf_normalization(g.random_range(0.3..10.0), g.random_range(0.05..20.0))).collect();
    tally("pdf normalization", cases);

    let cases = (0..10).map(|i| sampler_ks(0.5 + i as f64, 0.2 + 0.5 * i as f64, 100_000, 100 + i)).collect();
    tally("inverse-transform sampler", cases);

    let cases = posterior_datasets().iter().map(|(_, d, p)| g2_sampler(d, p, 50_000, 9)).collect();
    tally("g2 rejection sampler", cases);

    let cases = (0..50)
        .map(|_| {
            let n = g.random_range(1..60);
            let data: Vec<f64> = (0..n).map(|_| g.random_range(0.1..10.0f64)).collect();
            ks_brute_force(&data, g.random_range(0.5..5.0), g.random_range(0.2..3.0))
        })
        .chain((1..=5).map(|n| p_value_decreasing(n * 7)))
        .collect();
    tally("K-S statistic and p-value", cases);

    // Determinism under fixed seeds.
    let (d, _, _) = random_instance(&mut g, 3);
    let s = d.reciprocal();
    let config = IsConfig { draws: 3000, seed: 5, level: 0.9 };
    let a = bayes_is(&s, &GammaPriors::INFORMATIVE, &config).unwrap();
    let b = bayes_is(&s, &GammaPriors::INFORMATIVE, &config).unwrap();
    let study = StudyConfig {
        true_alpha: 2.0,
        true_lambda: 1.0,
        cells: vec![Cell { n: 15, time: 1.5, big_r: 10 }],
        priors: vec![GammaPriors::INFORMATIVE],
        replicates: 8,
        draws: 300,
        base_seed: 3,
        methods: vec![Method::Mle, Method::Lindley, Method::Is],
        level: 0.95,
        solver: SolverConfig::default(),
    };
    let law = IwParams::from_rate(2.0, 1.0).unwrap();
    let cases = vec![
        ensure_eq(a.draws == b.draws && a.alpha == b.alpha, "bayes_is repeated with one seed"),
        ensure_eq(law.sample(100, 1).unwrap() == law.sample(100, 1).unwrap(), "sample repeated with one seed"),
        ensure_eq(run_study(&study).unwrap() == run_study(&study).unwrap(), "run_study repeated with one seed"),
    ];
    tally("determinism under fixed seeds", cases);
    out
}

fn ensure_eq(ok: bool, what: &str) -> super::checks::Check {
    if ok {
        Ok(())
    } else {
        Err(format!("{what} differed"))
    }
}
