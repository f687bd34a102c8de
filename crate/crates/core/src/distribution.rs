//! The two-parameter inverse Weibull distribution.
//!
//! With shape `alpha` and scale `theta`,
//!
//! ```text
//! F(x) = exp(-(theta * x)^(-alpha))          x > 0
//! f(x) = alpha * theta^(-alpha) * x^(-(alpha + 1)) * exp(-(theta * x)^(-alpha))
//! ```
//!
//! Most of the estimation code works with the rate `lambda = theta^(-alpha)`,
//! under which `F(x) = exp(-lambda * x^(-alpha))`. Both parametrizations are
//! carried by [`IwParams`] so that callers never have to convert by hand.
//!
//! `alpha = 1` and `alpha = 2` give the inverse exponential and inverse
//! Rayleigh laws.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, ensure_probability_open, Error, Result};
use crate::seed;

/// Converts a scale `theta` into the rate `lambda = theta^(-alpha)`.
pub fn rate_from_scale(alpha: f64, theta: f64) -> Result<f64> {
    ensure_positive("alpha", alpha)?;
    ensure_positive("theta", theta)?;
    Ok((-alpha * theta.ln()).exp())
}

/// Converts a rate `lambda` back into the scale `theta = lambda^(-1/alpha)`.
pub fn scale_from_rate(alpha: f64, lambda: f64) -> Result<f64> {
    ensure_positive("alpha", alpha)?;
    ensure_positive("lambda", lambda)?;
    Ok((-lambda.ln() / alpha).exp())
}

/// Shape, scale and the derived rate of an inverse Weibull law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwParams {
    alpha: f64,
    theta: f64,
    lambda: f64,
}

impl IwParams {
    /// Builds the parameters from shape and scale.
    pub fn from_scale(alpha: f64, theta: f64) -> Result<Self> {
        let lambda = rate_from_scale(alpha, theta)?;
        Self::checked(alpha, theta, lambda)
    }

    /// Builds the parameters from shape and rate.
    pub fn from_rate(alpha: f64, lambda: f64) -> Result<Self> {
        let theta = scale_from_rate(alpha, lambda)?;
        Self::checked(alpha, theta, lambda)
    }

    fn checked(alpha: f64, theta: f64, lambda: f64) -> Result<Self> {
        // Extreme shapes can push the derived parameter out of f64 range.
        if !(theta.is_finite() && theta > 0.0 && lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!(
                "parameters (alpha={alpha}, theta={theta}, lambda={lambda}) are not representable"
            )));
        }
        Ok(Self { alpha, theta, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `(theta * x)^(-alpha)` evaluated through logarithms.
    fn standardized(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Domain(format!("x must be a positive finite number, got {x}")));
        }
        Ok((-self.alpha * (self.theta.ln() + x.ln())).exp())
    }

    /// Probability density at `x > 0`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        let z = self.standardized(x)?;
        if z == 0.0 || z.is_infinite() {
            return Ok(0.0);
        }
        // alpha * theta^-alpha * x^-(alpha+1) == alpha * z / x
        Ok(self.alpha * z * (-z).exp() / x)
    }

    /// Natural log of the density at `x > 0`.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        let z = self.standardized(x)?;
        let ln_z = -self.alpha * (self.theta.ln() + x.ln());
        Ok(self.alpha.ln() + ln_z - z - x.ln())
    }

    /// Cumulative distribution function at `x > 0`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        Ok((-self.standardized(x)?).exp())
    }

    /// Survival function `1 - F(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> Result<f64> {
        if x == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(-(-self.standardized(x)?).exp_m1())
    }

    /// Inverse of [`cdf`](Self::cdf): `(lambda / -ln p)^(1/alpha)`.
    pub fn quantile(&self, prob: f64) -> Result<f64> {
        ensure_probability_open("prob", prob)?;
        Ok(self.quantile_unchecked(prob))
    }

    fn quantile_unchecked(&self, prob: f64) -> f64 {
        ((self.lambda.ln() - (-prob.ln()).ln()) / self.alpha).exp()
    }

    /// Draws a single variate by inverse transform.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile_unchecked(u)
    }

    /// Fills a vector with `count` inverse-transform draws from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }

    /// `count` draws from a generator seeded by `seed`; identical seeds give
    /// identical sequences.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::Input("sample count must be at least 1".into()));
        }
        let mut rng = seed::rng_from_seed(seed);
        Ok(self.sample_with(count, &mut rng))
    }
}
