//! Lindley's approximation to the posterior means of `alpha` and `lambda`
//! under independent gamma priors and squared error loss.
//!
//! For a function `g(alpha, lambda)` the approximation evaluated at the MLE is
//!
//! ```text
//! g + 1/2 [A + l30 B12 + l03 B21 + l21 C12 + l12 C21] + p1 A12 + p2 A21
//! ```
//!
//! where `l_ij` are third partials of the log-likelihood (`i` in `alpha`,
//! `j` in `lambda`), `tau` is the inverse of the negated Hessian, `p_i` are
//! partials of the log prior, and the aggregates depend on the gradient `w`
//! and Hessian of `g`. Only `g = alpha` and `g = lambda` are needed, for
//! which the Hessian of `g` is zero and therefore `A = 0`.

use serde::{Deserialize, Serialize};

use crate::censoring::ReciprocalSample;
use crate::distribution::scale_from_rate;
use crate::error::{Error, Result};
use crate::mle::{require_failures, CensoringTerm, CovarianceMatrix, MleFit, PowerSums};

/// Hyperparameters of `alpha ~ Gamma(a, b)` and `lambda ~ Gamma(c, d)` in
/// shape/rate form. All zeros is the improper prior `1 / (alpha lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPriors {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GammaPriors {
    /// Prior 1 of the simulation study: `a = b = c = d = 0`.
    pub const NON_INFORMATIVE: GammaPriors = GammaPriors { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };
    /// Prior 2 of the simulation study: `a = 2, b = c = d = 1`.
    pub const INFORMATIVE: GammaPriors = GammaPriors { a: 2.0, b: 1.0, c: 1.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("prior hyperparameter {name} must be >= 0, got {v}")));
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// `d/d alpha ln pi(alpha, lambda) = (a - 1)/alpha - b`
    pub fn d_alpha_log_prior(&self, alpha: f64) -> f64 {
        (self.a - 1.0) / alpha - self.b
    }

    /// `d/d lambda ln pi(alpha, lambda) = (c - 1)/lambda - d`
    pub fn d_lambda_log_prior(&self, lambda: f64) -> f64 {
        (self.c - 1.0) / lambda - self.d
    }
}

impl std::fmt::Display for GammaPriors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

impl std::str::FromStr for GammaPriors {
    type Err = Error;

    /// Parses `a,b,c,d`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Input(format!("cannot parse prior {s:?}; expected a,b,c,d")))?;
        match parts.as_slice() {
            &[a, b, c, d] => GammaPriors::new(a, b, c, d),
            _ => Err(Error::Input(format!("prior {s:?} must have exactly four values a,b,c,d"))),
        }
    }
}

/// Third partial derivatives of the log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThirdDerivatives {
    /// `d^3 l / d alpha^3`
    pub l30: f64,
    /// `d^3 l / d lambda^3`
    pub l03: f64,
    /// `d^3 l / d alpha^2 d lambda`
    pub l21: f64,
    /// `d^3 l / d alpha d lambda^2`
    pub l12: f64,
}

impl ThirdDerivatives {
    pub const ZERO: ThirdDerivatives = ThirdDerivatives { l30: 0.0, l03: 0.0, l21: 0.0, l12: 0.0 };
}

pub fn third_derivatives(alpha: f64, lambda: f64, sample: &ReciprocalSample) -> Result<ThirdDerivatives> {
    crate::error::ensure_positive("alpha", alpha)?;
    crate::error::ensure_positive("lambda", lambda)?;
    require_failures(sample, 1)?;
    let r = sample.r() as f64;
    let sums = PowerSums::new(alpha, sample);
    let mut t = ThirdDerivatives {
        l30: 2.0 * r / alpha.powi(3) - lambda * sums.s3,
        l03: 2.0 * r / lambda.powi(3),
        l21: -sums.s2,
        l12: 0.0,
    };
    if sample.censored() > 0 {
        let c = CensoringTerm::new(alpha, lambda, sample);
        t.l30 += c.d_aaa();
        t.l03 += c.d_lll();
        t.l21 += c.d_aal();
        t.l12 += c.d_all();
    }
    Ok(t)
}

/// Expansion aggregates for one target function `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub a: f64,
    pub b12: f64,
    pub b21: f64,
    pub c12: f64,
    pub c21: f64,
    pub a12: f64,
    pub a21: f64,
}

impl Aggregates {
    /// Aggregates for a target with gradient `w` and zero Hessian.
    fn for_linear_target(w: [f64; 2], tau: &CovarianceMatrix) -> Self {
        let t = [[tau.v11, tau.v12], [tau.v12, tau.v22]];
        let b = |i: usize, j: usize| (w[i] * t[i][i] + w[j] * t[i][j]) * t[i][i];
        let c =
            |i: usize, j: usize| 3.0 * w[i] * t[i][i] * t[i][j] + w[j] * (t[i][i] * t[j][j] + 2.0 * t[i][j] * t[i][j]);
        let a_ij = |i: usize, j: usize| w[i] * t[i][i] + w[j] * t[j][i];
        Aggregates { a: 0.0, b12: b(0, 1), b21: b(1, 0), c12: c(0, 1), c21: c(1, 0), a12: a_ij(0, 1), a21: a_ij(1, 0) }
    }

    fn correction(&self, l: &ThirdDerivatives, p1: f64, p2: f64) -> f64 {
        0.5 * (self.a + l.l30 * self.b12 + l.l03 * self.b21 + l.l21 * self.c12 + l.l12 * self.c21)
            + p1 * self.a12
            + p2 * self.a21
    }
}

/// Every quantity entering the approximation, kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindleyWorkspace {
    pub alpha_hat: f64,
    pub lambda_hat: f64,
    pub third: ThirdDerivatives,
    pub tau: CovarianceMatrix,
    pub p1: f64,
    pub p2: f64,
    pub for_alpha: Aggregates,
    pub for_lambda: Aggregates,
}

/// Approximate posterior means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindleyEstimate {
    pub alpha_l: f64,
    pub lambda_l: f64,
    /// `lambda_l^(-1/alpha_l)`
    pub theta_l: f64,
}

impl LindleyWorkspace {
    pub fn new(fit: &MleFit, priors: &GammaPriors, sample: &ReciprocalSample) -> Result<Self> {
        if !fit.converged {
            return Err(Error::Input("Lindley's approximation needs a converged MLE".into()));
        }
        let third = third_derivatives(fit.alpha_hat, fit.lambda_hat, sample)?;
        Ok(Self::from_parts(fit.alpha_hat, fit.lambda_hat, third, fit.cov, priors))
    }

    pub fn from_parts(
        alpha_hat: f64,
        lambda_hat: f64,
        third: ThirdDerivatives,
        tau: CovarianceMatrix,
        priors: &GammaPriors,
    ) -> Self {
        LindleyWorkspace {
            alpha_hat,
            lambda_hat,
            third,
            tau,
            p1: priors.d_alpha_log_prior(alpha_hat),
            p2: priors.d_lambda_log_prior(lambda_hat),
            for_alpha: Aggregates::for_linear_target([1.0, 0.0], &tau),
            for_lambda: Aggregates::for_linear_target([0.0, 1.0], &tau),
        }
    }

    /// Same workspace with every third derivative set to zero, leaving only
    /// the prior terms.
    pub fn without_curvature(mut self) -> Self {
        self.third = ThirdDerivatives::ZERO;
        self
    }

    pub fn estimate(&self) -> Result<LindleyEstimate> {
        let alpha_l = self.alpha_hat + self.for_alpha.correction(&self.third, self.p1, self.p2);
        let lambda_l = self.lambda_hat + self.for_lambda.correction(&self.third, self.p1, self.p2);
        if !(alpha_l.is_finite() && lambda_l.is_finite()) {
            return Err(Error::Numeric(format!("Lindley correction overflowed (p1={}, p2={})", self.p1, self.p2)));
        }
        if alpha_l <= 0.0 || lambda_l <= 0.0 {
            return Err(Error::Numeric(format!(
                "Lindley approximation is not positive (alpha={alpha_l}, lambda={lambda_l})"
            )));
        }
        Ok(LindleyEstimate { alpha_l, lambda_l, theta_l: scale_from_rate(alpha_l, lambda_l)? })
    }
}

/// Approximate Bayes estimates of `alpha`, `lambda` and `theta`.
pub fn lindley_estimates(fit: &MleFit, priors: &GammaPriors, sample: &ReciprocalSample) -> Result<LindleyEstimate> {
    LindleyWorkspace::new(fit, priors, sample)?.estimate()
}
