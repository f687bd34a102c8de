//! Likelihood of hybrid censored inverse Weibull data, its derivatives, the
//! maximum likelihood fit and Wald-type confidence intervals.
//!
//! With reciprocals `x_i = 1/t_(i)`, `r` observed failures, `n - r` units
//! censored at `u`, and `s = lambda * u^(-alpha)`:
//!
//! ```text
//! l(alpha, lambda) = r ln(alpha lambda) - lambda sum x_i^alpha
//!                    + (alpha + 1) sum ln x_i + (n - r) ln(1 - exp(-s))
//! ```
//!
//! The censoring term is a function of `s` alone, so its partial derivatives
//! are assembled from `d^k/ds^k ln(1 - e^-s)` and the partials of `s` by the
//! multivariate chain rule.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::censoring::ReciprocalSample;
use crate::distribution::scale_from_rate;
use crate::error::{ensure_positive, Error, Result};

/// `sum_i x_i^alpha (ln x_i)^k` for `k = 0..=3`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PowerSums {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl PowerSums {
    pub(crate) fn new(alpha: f64, sample: &ReciprocalSample) -> Self {
        let mut sums = PowerSums { s0: 0.0, s1: 0.0, s2: 0.0, s3: 0.0 };
        for &lx in sample.ln_x() {
            let p = (alpha * lx).exp();
            sums.s0 += p;
            sums.s1 += p * lx;
            sums.s2 += p * lx * lx;
            sums.s3 += p * lx * lx * lx;
        }
        sums
    }
}

/// The censoring contribution `k ln(1 - e^-s)` and the partials of `s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CensoringTerm {
    /// Number of censored units `n - r`.
    pub k: f64,
    /// `ln(1 - e^-s)`
    pub ln_surv: f64,
    /// First three derivatives of `ln(1 - e^-s)` with respect to `s`.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub s: f64,
    /// `u^(-alpha)`
    pub v: f64,
    pub ln_u: f64,
}

impl CensoringTerm {
    pub(crate) fn new(alpha: f64, lambda: f64, sample: &ReciprocalSample) -> Self {
        let ln_u = sample.u().ln();
        let v = (-alpha * ln_u).exp();
        let s = lambda * v;
        let q = (-s).exp();
        let one_minus_q = -(-s).exp_m1();
        CensoringTerm {
            k: sample.censored() as f64,
            ln_surv: one_minus_q.ln(),
            c1: q / one_minus_q,
            c2: -q / (one_minus_q * one_minus_q),
            c3: q * (1.0 + q) / (one_minus_q * one_minus_q * one_minus_q),
            s,
            v,
            ln_u,
        }
    }

    fn active(&self) -> bool {
        self.k > 0.0
    }

    // Partials of s = lambda u^-alpha.
    fn s_a(&self) -> f64 {
        -self.s * self.ln_u
    }
    fn s_l(&self) -> f64 {
        self.v
    }
    fn s_aa(&self) -> f64 {
        self.s * self.ln_u * self.ln_u
    }
    fn s_al(&self) -> f64 {
        -self.v * self.ln_u
    }
    fn s_aaa(&self) -> f64 {
        -self.s * self.ln_u.powi(3)
    }
    fn s_aal(&self) -> f64 {
        self.v * self.ln_u * self.ln_u
    }

    fn d_a(&self) -> f64 {
        self.k * self.c1 * self.s_a()
    }
    fn d_l(&self) -> f64 {
        self.k * self.c1 * self.s_l()
    }
    fn d_aa(&self) -> f64 {
        self.k * (self.c2 * self.s_a().powi(2) + self.c1 * self.s_aa())
    }
    fn d_al(&self) -> f64 {
        self.k * (self.c2 * self.s_a() * self.s_l() + self.c1 * self.s_al())
    }
    fn d_ll(&self) -> f64 {
        self.k * self.c2 * self.s_l().powi(2)
    }
    pub(crate) fn d_aaa(&self) -> f64 {
        let sa = self.s_a();
        self.k * (self.c3 * sa.powi(3) + 3.0 * self.c2 * self.s_aa() * sa + self.c1 * self.s_aaa())
    }
    pub(crate) fn d_aal(&self) -> f64 {
        let (sa, sl) = (self.s_a(), self.s_l());
        self.k
            * (self.c3 * sa * sa * sl + self.c2 * (self.s_aa() * sl + 2.0 * self.s_al() * sa) + self.c1 * self.s_aal())
    }
    pub(crate) fn d_all(&self) -> f64 {
        // s_ll and s_all vanish because s is linear in lambda.
        let (sa, sl) = (self.s_a(), self.s_l());
        self.k * (self.c3 * sa * sl * sl + 2.0 * self.c2 * self.s_al() * sl)
    }
    pub(crate) fn d_lll(&self) -> f64 {
        self.k * self.c3 * self.s_l().powi(3)
    }
}

pub(crate) fn require_failures(sample: &ReciprocalSample, required: usize) -> Result<()> {
    if sample.r() < required {
        return Err(Error::InsufficientData { observed: sample.r(), required });
    }
    Ok(())
}

fn check_point(alpha: f64, lambda: f64) -> Result<()> {
    ensure_positive("alpha", alpha)?;
    ensure_positive("lambda", lambda)
}

/// Log-likelihood up to an additive constant.
pub fn log_likelihood(alpha: f64, lambda: f64, sample: &ReciprocalSample) -> Result<f64> {
    check_point(alpha, lambda)?;
    require_failures(sample, 1)?;
    Ok(log_likelihood_unchecked(alpha, lambda, sample))
}

fn log_likelihood_unchecked(alpha: f64, lambda: f64, sample: &ReciprocalSample) -> f64 {
    let r = sample.r() as f64;
    let sums = PowerSums::new(alpha, sample);
    let mut ll = r * (alpha * lambda).ln() - lambda * sums.s0 + (alpha + 1.0) * sample.sum_ln_x();
    if sample.censored() > 0 {
        let c = CensoringTerm::new(alpha, lambda, sample);
        ll += c.k * c.ln_surv;
    }
    ll
}

/// Partial derivatives of the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub d_alpha: f64,
    pub d_lambda: f64,
}

impl Score {
    pub fn sup_norm(&self) -> f64 {
        self.d_alpha.abs().max(self.d_lambda.abs())
    }
}

pub fn score(alpha: f64, lambda: f64, sample: &ReciprocalSample) -> Result<Score> {
    check_point(alpha, lambda)?;
    require_failures(sample, 1)?;
    Ok(score_unchecked(alpha, lambda, sample, &PowerSums::new(alpha, sample)))
}

fn score_unchecked(alpha: f64, lambda: f64, sample: &ReciprocalSample, sums: &PowerSums) -> Score {
    let r = sample.r() as f64;
    let mut d_alpha = r / alpha - lambda * sums.s1 + sample.sum_ln_x();
    let mut d_lambda = r / lambda - sums.s0;
    let c = CensoringTerm::new(alpha, lambda, sample);
    if c.active() {
        d_alpha += c.d_a();
        d_lambda += c.d_l();
    }
    Score { d_alpha, d_lambda }
}

/// Second partials of the log-likelihood at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub d2_aa: f64,
    pub d2_al: f64,
    pub d2_ll: f64,
}

impl FisherMatrix {
    /// Inverse of the negated matrix, i.e. the asymptotic covariance of the MLE.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        let (n11, n12, n22) = (-self.d2_aa, -self.d2_al, -self.d2_ll);
        let det = n11 * n22 - n12 * n12;
        if !(n11 > 0.0 && det > 0.0 && det.is_finite()) {
            return Err(Error::Numeric(format!("observed information is not positive definite (det = {det:e})")));
        }
        CovarianceMatrix::new(n22 / det, -n12 / det, n11 / det)
    }
}

/// Symmetric 2x2 covariance of `(alpha, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub v11: f64,
    pub v12: f64,
    pub v22: f64,
}

impl CovarianceMatrix {
    pub fn new(v11: f64, v12: f64, v22: f64) -> Result<Self> {
        if !(v11 > 0.0 && v22 > 0.0 && v11 * v22 - v12 * v12 > 0.0) {
            return Err(Error::Numeric(format!("covariance [{v11}, {v12}; {v12}, {v22}] is not positive definite")));
        }
        Ok(Self { v11, v12, v22 })
    }

    /// `g' V g`
    pub fn quadratic_form(&self, g: [f64; 2]) -> f64 {
        g[0] * g[0] * self.v11 + 2.0 * g[0] * g[1] * self.v12 + g[1] * g[1] * self.v22
    }
}

pub fn observed_fisher(alpha: f64, lambda: f64, sample: &ReciprocalSample) -> Result<FisherMatrix> {
    check_point(alpha, lambda)?;
    require_failures(sample, 1)?;
    Ok(fisher_unchecked(alpha, lambda, sample, &PowerSums::new(alpha, sample)))
}

fn fisher_unchecked(alpha: f64, lambda: f64, sample: &ReciprocalSample, sums: &PowerSums) -> FisherMatrix {
    let r = sample.r() as f64;
    let mut m =
        FisherMatrix { d2_aa: -r / (alpha * alpha) - lambda * sums.s2, d2_al: -sums.s1, d2_ll: -r / (lambda * lambda) };
    let c = CensoringTerm::new(alpha, lambda, sample);
    if c.active() {
        m.d2_aa += c.d_aa();
        m.d2_al += c.d_al();
        m.d2_ll += c.d_ll();
    }
    m
}

/// Settings of the damped Newton solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence threshold on the sup-norm of the score.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 200 }
    }
}

/// Result of [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub alpha_hat: f64,
    pub lambda_hat: f64,
    pub theta_hat: f64,
    pub loglik: f64,
    pub fisher: FisherMatrix,
    pub cov: CovarianceMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

/// Starting point: least squares fit of `ln(-ln F_i) = ln lambda + alpha ln x_i`
/// over the observed order statistics with plotting positions `(i - 0.5)/n`,
/// followed by `lambda = r / sum x_i^alpha`.
pub fn initial_guess(sample: &ReciprocalSample) -> (f64, f64) {
    let n = sample.n() as f64;
    let pts: Vec<(f64, f64)> = sample
        .ln_x()
        .iter()
        .enumerate()
        .map(|(i, &lx)| {
            let f = (i as f64 + 0.5) / n;
            (lx, (-f.ln()).ln())
        })
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let alpha0 = if slope.is_finite() && slope > 0.0 { slope.clamp(1e-2, 1e2) } else { 1.0 };
    let lambda0 = sample.r() as f64 / PowerSums::new(alpha0, sample).s0;
    (alpha0, lambda0)
}

const MAX_LOG_STEP: f64 = 3.0;
const MAX_HALVINGS: usize = 60;

/// Maximum likelihood estimates by damped Newton iterations on
/// `(ln alpha, ln lambda)`.
///
/// Each step solves the Newton system in log coordinates (shifted towards
/// steepest ascent when the Hessian is not negative definite) and is halved
/// until the log-likelihood does not decrease.
pub fn fit_mle(sample: &ReciprocalSample, config: &SolverConfig) -> Result<MleFit> {
    require_failures(sample, 2)?;
    let (mut alpha, mut lambda) = initial_guess(sample);
    let mut ll = log_likelihood_unchecked(alpha, lambda, sample);
    if !ll.is_finite() {
        return Err(Error::Numeric(format!("log-likelihood is not finite at the starting point ({alpha}, {lambda})")));
    }

    let mut grad_norm = f64::INFINITY;
    for iteration in 0..=config.max_iterations {
        let sums = PowerSums::new(alpha, sample);
        let sc = score_unchecked(alpha, lambda, sample, &sums);
        grad_norm = sc.sup_norm();
        if grad_norm < config.tolerance {
            return finish(alpha, lambda, ll, sample, &sums, iteration, grad_norm);
        }
        if iteration == config.max_iterations {
            break;
        }

        let h = fisher_unchecked(alpha, lambda, sample, &sums);
        // Gradient and Hessian with respect to (ln alpha, ln lambda).
        let g = [alpha * sc.d_alpha, lambda * sc.d_lambda];
        let h11 = alpha * alpha * h.d2_aa + g[0];
        let h12 = alpha * lambda * h.d2_al;
        let h22 = lambda * lambda * h.d2_ll + g[1];
        let mut step = newton_direction(h11, h12, h22, g);
        let len = step[0].abs().max(step[1].abs());
        if len > MAX_LOG_STEP {
            step = [step[0] * MAX_LOG_STEP / len, step[1] * MAX_LOG_STEP / len];
        }

        let floor = ll - 8.0 * f64::EPSILON * ll.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let a = alpha * (t * step[0]).exp();
            let l = lambda * (t * step[1]).exp();
            let cand = log_likelihood_unchecked(a, l, sample);
            if cand.is_finite() && cand >= floor {
                accepted = Some((a, l, cand));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((a, l, cand)) => {
                alpha = a;
                lambda = l;
                ll = cand;
            }
            None => break,
        }
    }
    Err(Error::NoConvergence { iterations: config.max_iterations, alpha, lambda, grad_norm })
}

/// Ascent direction `-(H - mu I)^{-1} g` with the smallest `mu >= 0` (from a
/// geometric ladder) that makes the shifted matrix negative definite.
fn newton_direction(h11: f64, h12: f64, h22: f64, g: [f64; 2]) -> [f64; 2] {
    let scale = h11.abs().max(h22.abs()).max(1e-12);
    let mut mu = 0.0;
    for _ in 0..40 {
        let (a, c) = (h11 - mu, h22 - mu);
        let det = a * c - h12 * h12;
        if a < 0.0 && det > 0.0 {
            return [-(c * g[0] - h12 * g[1]) / det, -(-h12 * g[0] + a * g[1]) / det];
        }
        mu = if mu == 0.0 { 1e-3 * scale } else { mu * 10.0 };
    }
    let norm = g[0].abs().max(g[1].abs()).max(f64::MIN_POSITIVE);
    [g[0] / norm, g[1] / norm]
}

fn finish(
    alpha: f64,
    lambda: f64,
    loglik: f64,
    sample: &ReciprocalSample,
    sums: &PowerSums,
    iterations: usize,
    grad_norm: f64,
) -> Result<MleFit> {
    let fisher = fisher_unchecked(alpha, lambda, sample, sums);
    let cov = fisher.covariance()?;
    Ok(MleFit {
        alpha_hat: alpha,
        lambda_hat: lambda,
        theta_hat: scale_from_rate(alpha, lambda)?,
        loglik,
        fisher,
        cov,
        iterations,
        converged: true,
        grad_norm,
    })
}

/// A two-sided interval at a stated coverage level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Wald intervals for `alpha`, `lambda` and `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticIntervals {
    pub alpha: ConfidenceInterval,
    pub lambda: ConfidenceInterval,
    /// Delta-method interval for `theta = lambda^(-1/alpha)`.
    pub theta: ConfidenceInterval,
}

/// Upper `(1 - level)/2` point of the standard normal.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    crate::error::ensure_probability_open("level", level)?;
    let std_normal = Normal::standard();
    Ok(std_normal.inverse_cdf(0.5 + 0.5 * level))
}

/// `estimate -/+ z sqrt(var)` for alpha and lambda from the observed
/// information. The theta interval uses the delta method with gradient
/// `(theta ln(lambda) / alpha^2, -theta / (alpha lambda))` and the full covariance.
pub fn asymptotic_ci(fit: &MleFit, level: f64) -> Result<AsymptoticIntervals> {
    let z = normal_critical_value(level)?;
    let wald =
        |est: f64, var: f64| ConfidenceInterval { lower: est - z * var.sqrt(), upper: est + z * var.sqrt(), level };
    let (a, l, th) = (fit.alpha_hat, fit.lambda_hat, fit.theta_hat);
    let grad = [th * l.ln() / (a * a), -th / (a * l)];
    Ok(AsymptoticIntervals {
        alpha: wald(a, fit.cov.v11),
        lambda: wald(l, fit.cov.v22),
        theta: wald(th, fit.cov.quadratic_form(grad)),
    })
}
