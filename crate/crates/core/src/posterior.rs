//! Exact posterior sampling by importance weighting.
//!
//! Under independent gamma priors the joint posterior factorizes as
//!
//! ```text
//! pi(alpha, lambda | data) ∝ g1(lambda | alpha) * g2(alpha) * h(alpha, lambda)
//! g1 = Gamma(shape r + c, rate d + sum x_i^alpha)
//! g2 ∝ alpha^(a + r - 1) e^(-b alpha) prod x_i^(alpha + 1) / (d + sum x_i^alpha)^(r + c)
//! h  = (1 - exp(-lambda u^-alpha))^(n - r)
//! ```
//!
//! `g2` is log-concave, so exact draws come from a rejection sampler with a
//! flat-top, exponential-tail envelope built around its mode. Pairs drawn from
//! `g2 * g1` are reweighted by `h`, and posterior means, variances, quantiles
//! and HPD intervals are computed from the weighted sample.
//!
//! Draws are produced in fixed-size chunks, each with its own generator seeded
//! from `(seed, chunk index)`, so results do not depend on the thread count.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::censoring::ReciprocalSample;
use crate::error::{ensure_probability_open, Error, Result};
use crate::lindley::GammaPriors;
use crate::mle::{require_failures, ConfidenceInterval};
use crate::seed;

/// Number of draws generated per independent generator stream.
pub const CHUNK_SIZE: usize = 1000;

/// Slack used when comparing cumulative weights with a probability level.
const CUMULATIVE_SLACK: f64 = 1e-12;

/// `ln(d + sum_i exp(alpha ln x_i))` together with `d/d alpha` of it.
fn log_rate_and_slope(alpha: f64, ln_x: &[f64], d: f64) -> (f64, f64) {
    let mut max = if d > 0.0 { d.ln() } else { f64::NEG_INFINITY };
    for &lx in ln_x {
        max = max.max(alpha * lx);
    }
    let mut total = if d > 0.0 { (d.ln() - max).exp() } else { 0.0 };
    let mut weighted = 0.0;
    for &lx in ln_x {
        let e = (alpha * lx - max).exp();
        total += e;
        weighted += e * lx;
    }
    (max + total.ln(), weighted / total)
}

/// The marginal posterior kernel `g2` of `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct AlphaMarginal<'a> {
    sample: &'a ReciprocalSample,
    priors: GammaPriors,
}

impl<'a> AlphaMarginal<'a> {
    pub fn new(sample: &'a ReciprocalSample, priors: &GammaPriors) -> Result<Self> {
        require_failures(sample, 1)?;
        Ok(Self { sample, priors: *priors })
    }

    fn shape_power(&self) -> f64 {
        self.priors.a + self.sample.r() as f64 - 1.0
    }

    /// `ln g2(alpha)` up to an additive constant; `alpha = 0` is allowed
    /// internally when the power of `alpha` is zero.
    fn eval(&self, alpha: f64) -> f64 {
        let r = self.sample.r() as f64;
        let (log_rate, _) = log_rate_and_slope(alpha, self.sample.ln_x(), self.priors.d);
        let power = self.shape_power();
        let alpha_term = if power == 0.0 { 0.0 } else { power * alpha.ln() };
        -(r + self.priors.c) * log_rate + alpha_term - self.priors.b * alpha + (alpha + 1.0) * self.sample.sum_ln_x()
    }

    fn eval_slope(&self, alpha: f64) -> f64 {
        let r = self.sample.r() as f64;
        let (_, slope) = log_rate_and_slope(alpha, self.sample.ln_x(), self.priors.d);
        let power = self.shape_power();
        let alpha_term = if power == 0.0 { 0.0 } else { power / alpha };
        -(r + self.priors.c) * slope + alpha_term - self.priors.b + self.sample.sum_ln_x()
    }

    pub fn log_density(&self, alpha: f64) -> Result<f64> {
        crate::error::ensure_positive("alpha", alpha)?;
        Ok(self.eval(alpha))
    }

    /// Derivative of [`log_density`](Self::log_density).
    pub fn log_density_slope(&self, alpha: f64) -> Result<f64> {
        crate::error::ensure_positive("alpha", alpha)?;
        Ok(self.eval_slope(alpha))
    }

    /// Locates the mode by bisection on the (decreasing) slope. Returns 0 when
    /// the density is maximal at the boundary.
    pub fn mode(&self) -> Result<f64> {
        let mut hi = 1.0;
        let mut expansions = 0;
        while self.eval_slope(hi) > 0.0 {
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Numeric(
                    "the marginal posterior of alpha is increasing without bound (improper posterior)".into(),
                ));
            }
        }
        let mut lo = hi;
        loop {
            lo *= 0.5;
            if lo < 1e-300 {
                return Ok(0.0);
            }
            if self.eval_slope(lo) > 0.0 {
                break;
            }
            hi = lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval_slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Free-function form of [`AlphaMarginal::log_density`].
pub fn g2_log_density(alpha: f64, sample: &ReciprocalSample, priors: &GammaPriors) -> Result<f64> {
    AlphaMarginal::new(sample, priors)?.log_density(alpha)
}

/// Exact rejection sampler for a log-concave density on `(0, inf)`.
///
/// The envelope is `exp(phi(m))` on `[left, right]`, where `phi` has dropped
/// by about one unit from its value at the mode `m`, and beyond those points
/// the line through `(m, phi(m))` and the end point, which bounds a concave
/// `phi` from above outside the chord.
#[derive(Debug, Clone)]
pub struct LogConcaveSampler<F> {
    log_density: F,
    mode: f64,
    peak: f64,
    left: f64,
    right: f64,
    left_slope: Option<f64>,
    right_slope: f64,
    // Envelope masses relative to exp(peak).
    left_mass: f64,
    middle_mass: f64,
    right_mass: f64,
}

impl<F: Fn(f64) -> f64> LogConcaveSampler<F> {
    /// `mode` must maximize `log_density` over `(0, inf)`; `mode = 0` means the
    /// density is nonincreasing and `log_density(0)` must be finite.
    pub fn new(log_density: F, mode: f64) -> Result<Self> {
        let peak = log_density(mode);
        if !peak.is_finite() {
            return Err(Error::Numeric(format!("log density is not finite at its mode {mode}")));
        }
        let target = peak - 1.0;

        let (left, left_slope) = if mode > 0.0 {
            let mut lo = mode;
            let mut found = false;
            for _ in 0..1100 {
                lo *= 0.5;
                if lo == 0.0 {
                    break;
                }
                if log_density(lo) < target {
                    found = true;
                    break;
                }
            }
            if found {
                let mut hi = mode;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if log_density(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let drop = peak - log_density(lo);
                (lo, Some(drop / (mode - lo)))
            } else {
                // The density stays within e^-1 of its peak all the way to 0.
                (0.0, None)
            }
        } else {
            (0.0, None)
        };

        let mut step = mode.max(1e-3);
        let mut hi = mode + step;
        let mut expansions = 0;
        while log_density(hi) >= target {
            step *= 2.0;
            hi = mode + step;
            expansions += 1;
            if expansions > 1100 || !hi.is_finite() {
                return Err(Error::Numeric("log density does not decay to the right of its mode".into()));
            }
        }
        let mut lo = mode;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if log_density(mid) < target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let right = hi;
        let right_drop = peak - log_density(right);
        let right_slope = right_drop / (right - mode);
        if !(right_slope.is_finite() && right_slope > 0.0) {
            return Err(Error::Numeric("degenerate right envelope".into()));
        }

        let left_mass = match left_slope {
            Some(k) => (-(peak - log_density(left))).exp() / k,
            None => 0.0,
        };
        Ok(Self {
            middle_mass: right - left,
            right_mass: (-right_drop).exp() / right_slope,
            left_mass,
            log_density,
            mode,
            peak,
            left,
            right,
            left_slope,
            right_slope,
        })
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    /// Draws one variate; returns it with the number of proposals used.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let total = self.left_mass + self.middle_mass + self.right_mass;
        let mut proposals = 0;
        loop {
            proposals += 1;
            let pick = rng.random::<f64>() * total;
            let (x, log_env) = if pick < self.middle_mass {
                let x = self.left + rng.random::<f64>() * (self.right - self.left);
                (x, self.peak)
            } else if pick < self.middle_mass + self.right_mass {
                let e: f64 = Exp1.sample(rng);
                let x = self.right + e / self.right_slope;
                (x, self.peak - self.right_slope * (x - self.mode))
            } else {
                let k = self.left_slope.expect("left mass is zero without a left tail");
                let e: f64 = Exp1.sample(rng);
                let x = self.left - e / k;
                (x, self.peak - k * (self.mode - x))
            };
            if x <= 0.0 {
                continue;
            }
            let u: f64 = rng.sample(Open01);
            if u.ln() <= (self.log_density)(x) - log_env {
                return (x, proposals);
            }
        }
    }
}

/// Draws from `g2` with their rejection statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaDraws {
    pub alphas: Vec<f64>,
    pub proposals: u64,
}

impl AlphaDraws {
    /// Accepted draws per proposal, in `(0, 1]`.
    pub fn acceptance_ratio(&self) -> f64 {
        self.alphas.len() as f64 / self.proposals as f64
    }
}

fn alpha_sampler<'a>(
    sample: &'a ReciprocalSample,
    priors: &GammaPriors,
) -> Result<LogConcaveSampler<impl Fn(f64) -> f64 + 'a>> {
    let marginal = AlphaMarginal::new(sample, priors)?;
    let mode = marginal.mode()?;
    LogConcaveSampler::new(move |a| marginal.eval(a), mode)
}

/// `count` independent draws from the normalized `g2`.
pub fn sample_g2(count: usize, sample: &ReciprocalSample, priors: &GammaPriors, seed: u64) -> Result<AlphaDraws> {
    let sampler = alpha_sampler(sample, priors)?;
    let mut rng = seed::rng_from_seed(seed);
    let mut proposals = 0;
    let alphas = (0..count)
        .map(|_| {
            let (a, p) = sampler.sample(&mut rng);
            proposals += p;
            a
        })
        .collect();
    Ok(AlphaDraws { alphas, proposals })
}

/// Rate of the conditional gamma law of `lambda` given `alpha`: `d + sum x_i^alpha`.
pub fn g1_rate(alpha: f64, sample: &ReciprocalSample, priors: &GammaPriors) -> f64 {
    log_rate_and_slope(alpha, sample.ln_x(), priors.d).0.exp()
}

/// One draw of `lambda` from `Gamma(shape r + c, rate d + sum x_i^alpha)`.
pub fn sample_g1<R: Rng + ?Sized>(
    alpha: f64,
    sample: &ReciprocalSample,
    priors: &GammaPriors,
    rng: &mut R,
) -> Result<f64> {
    let shape = sample.r() as f64 + priors.c;
    let rate = g1_rate(alpha, sample, priors);
    let gamma = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Domain(format!("invalid gamma law (shape {shape}, rate {rate}): {e}")))?;
    Ok(gamma.sample(rng))
}

/// `ln h = (n - r) ln(1 - exp(-lambda u^-alpha))`.
pub fn log_importance_weight(alpha: f64, lambda: f64, sample: &ReciprocalSample) -> f64 {
    let k = sample.censored();
    if k == 0 {
        return 0.0;
    }
    let s = lambda * (-alpha * sample.u().ln()).exp();
    k as f64 * (-(-s).exp_m1()).ln()
}

/// Weighted posterior sample of `(alpha, lambda)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pairs: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl PosteriorDraws {
    /// Normalizes nonnegative, not necessarily normalized weights.
    pub fn new(pairs: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self> {
        if pairs.len() != weights.len() {
            return Err(Error::Input(format!("{} pairs but {} weights", pairs.len(), weights.len())));
        }
        if pairs.is_empty() {
            return Err(Error::Input("no posterior draws".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Input("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { pairs, weights })
    }

    /// Builds the sample from log weights, shifting by their maximum first.
    pub fn from_log_weights(pairs: Vec<(f64, f64)>, log_weights: &[f64]) -> Result<Self> {
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegenerateWeights);
        }
        let weights = log_weights.iter().map(|lw| (lw - max).exp()).collect();
        Self::new(pairs, weights)
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Normalized weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Kish effective sample size `1 / sum w_i^2`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Applies `statistic` to every pair, keeping the weights.
    pub fn project(&self, statistic: impl Fn(f64, f64) -> f64) -> WeightedValues {
        WeightedValues {
            values: self.pairs.iter().map(|&(a, l)| statistic(a, l)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Posterior mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Scalar values with normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedValues {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedValues {
    /// `weights` need not be normalized.
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let draws = PosteriorDraws::new(values.iter().map(|&v| (v, 0.0)).collect(), weights)?;
        Ok(Self { values, weights: draws.weights })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn moments(&self) -> Moments {
        let mean: f64 = self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let variance = self.values.iter().zip(&self.weights).map(|(v, w)| (v - mean).powi(2) * w).sum();
        Moments { mean, variance }
    }

    /// Orders the values (stably) and accumulates their weights.
    pub fn sorted(&self) -> WeightedEcdf {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&i, &j| self.values[i].total_cmp(&self.values[j]));
        let values: Vec<f64> = idx.iter().map(|&i| self.values[i]).collect();
        let mut acc = 0.0;
        let cumulative = idx
            .iter()
            .map(|&i| {
                acc += self.weights[i];
                acc
            })
            .collect();
        WeightedEcdf { values, cumulative }
    }
}

/// Step-function estimate of a posterior distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEcdf {
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedEcdf {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the first ordered value whose cumulative weight reaches `beta`,
    /// searching from `start`.
    fn index_from(&self, start: usize, beta: f64) -> usize {
        if beta <= 0.0 {
            return 0;
        }
        let mut i = start;
        while i + 1 < self.cumulative.len() && self.cumulative[i] < beta - CUMULATIVE_SLACK {
            i += 1;
        }
        i
    }

    /// `theta^(beta)`: the first ordered value at which the cumulative weight
    /// reaches `beta`, and the smallest value when `beta = 0`.
    pub fn quantile(&self, beta: f64) -> Result<f64> {
        if self.values.is_empty() {
            return Err(Error::Input("no draws".into()));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Domain(format!("quantile level must lie in [0, 1], got {beta}")));
        }
        Ok(self.values[self.index_from(0, beta)])
    }

    /// Shortest interval among
    /// `R_j = (theta^(j/M), theta^((j + floor(level M))/M))`, `j = 1..=M - floor(level M)`.
    pub fn hpd(&self, level: f64) -> Result<ConfidenceInterval> {
        ensure_probability_open("level", level)?;
        let m = self.values.len();
        if (m as f64) * level < 2.0 {
            return Err(Error::Input(format!("{m} draws are too few for a {level} credible interval")));
        }
        // Guard against level * M landing just below an integer.
        let width = ((level * m as f64) + 1e-9).floor() as usize;
        let mf = m as f64;
        let (mut lo_idx, mut hi_idx) = (0, 0);
        let mut best: Option<(f64, f64)> = None;
        for j in 1..=(m - width) {
            lo_idx = self.index_from(lo_idx, j as f64 / mf);
            hi_idx = self.index_from(hi_idx, (j + width) as f64 / mf);
            let (lower, upper) = (self.values[lo_idx], self.values[hi_idx]);
            if best.is_none_or(|(bl, bu)| upper - lower < bu - bl) {
                best = Some((lower, upper));
            }
        }
        let (lower, upper) = best.expect("at least one candidate interval");
        Ok(ConfidenceInterval { lower, upper, level })
    }
}

/// Weighted mean and variance of `statistic` over the draws.
pub fn importance_estimate(draws: &PosteriorDraws, statistic: impl Fn(f64, f64) -> f64) -> Result<Moments> {
    if draws.len() < 2 {
        return Err(Error::Input("at least two draws are required".into()));
    }
    Ok(draws.project(statistic).moments())
}

/// Free-function form of [`WeightedEcdf::quantile`].
pub fn weighted_quantile(ecdf: &WeightedEcdf, beta: f64) -> Result<f64> {
    ecdf.quantile(beta)
}

/// Free-function form of [`WeightedEcdf::hpd`].
pub fn hpd_interval(ecdf: &WeightedEcdf, level: f64) -> Result<ConfidenceInterval> {
    ecdf.hpd(level)
}

/// Posterior summary of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesEstimate {
    pub mean: f64,
    pub variance: f64,
    pub hpd: ConfidenceInterval,
}

impl BayesEstimate {
    fn from_values(values: &WeightedValues, level: f64) -> Result<Self> {
        let Moments { mean, variance } = values.moments();
        Ok(Self { mean, variance, hpd: values.sorted().hpd(level)? })
    }
}

/// Settings of the importance sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsConfig {
    /// Number of `(alpha, lambda)` pairs `M`.
    pub draws: usize,
    pub seed: u64,
    /// Credible level of the HPD intervals.
    pub level: f64,
}

impl Default for IsConfig {
    fn default() -> Self {
        Self { draws: 10_000, seed: 42, level: 0.95 }
    }
}

/// Output of [`bayes_is`].
#[derive(Debug, Clone)]
pub struct BayesIsResult {
    pub alpha: BayesEstimate,
    pub lambda: BayesEstimate,
    /// Summaries of `theta_i = lambda_i^(-1/alpha_i)`.
    pub theta: BayesEstimate,
    pub effective_sample_size: f64,
    pub acceptance_ratio: f64,
    pub draws: PosteriorDraws,
}

/// Pairs, log weights and proposal count from one chunk of draws.
type Chunk = (Vec<(f64, f64)>, Vec<f64>, u64);

/// Draws `config.draws` weighted pairs from the posterior.
pub fn draw_posterior(
    sample: &ReciprocalSample,
    priors: &GammaPriors,
    config: &IsConfig,
) -> Result<(PosteriorDraws, f64)> {
    if config.draws < 2 {
        return Err(Error::Input("at least two posterior draws are required".into()));
    }
    let sampler = alpha_sampler(sample, priors)?;
    let chunks = config.draws.div_ceil(CHUNK_SIZE);
    let parts: Vec<Result<Chunk>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_SIZE.min(config.draws - c * CHUNK_SIZE);
            let mut rng = seed::rng_for(config.seed, &[c as u64]);
            let mut pairs = Vec::with_capacity(len);
            let mut log_w = Vec::with_capacity(len);
            let mut proposals = 0;
            for _ in 0..len {
                let (alpha, p) = sampler.sample(&mut rng);
                proposals += p;
                let lambda = sample_g1(alpha, sample, priors, &mut rng)?;
                pairs.push((alpha, lambda));
                log_w.push(log_importance_weight(alpha, lambda, sample));
            }
            Ok((pairs, log_w, proposals))
        })
        .collect();

    let mut pairs = Vec::with_capacity(config.draws);
    let mut log_w = Vec::with_capacity(config.draws);
    let mut proposals = 0;
    for part in parts {
        let (p, w, n) = part?;
        pairs.extend(p);
        log_w.extend(w);
        proposals += n;
    }
    let acceptance = config.draws as f64 / proposals as f64;
    Ok((PosteriorDraws::from_log_weights(pairs, &log_w)?, acceptance))
}

/// Importance-sampling Bayes estimates and HPD intervals of `alpha`,
/// `lambda` and `theta`.
pub fn bayes_is(sample: &ReciprocalSample, priors: &GammaPriors, config: &IsConfig) -> Result<BayesIsResult> {
    ensure_probability_open("level", config.level)?;
    let (draws, acceptance_ratio) = draw_posterior(sample, priors, config)?;
    let alpha = BayesEstimate::from_values(&draws.project(|a, _| a), config.level)?;
    let lambda = BayesEstimate::from_values(&draws.project(|_, l| l), config.level)?;
    let theta = BayesEstimate::from_values(&draws.project(|a, l| (-l.ln() / a).exp()), config.level)?;
    Ok(BayesIsResult {
        alpha,
        lambda,
        theta,
        effective_sample_size: draws.effective_sample_size(),
        acceptance_ratio,
        draws,
    })
}
