//! Kolmogorov-Smirnov goodness of fit against a fitted inverse Weibull law.
//!
//! The p-value uses the limiting Kolmogorov distribution of `sqrt(n) D`
//! without a small-sample or estimated-parameter correction.

use serde::{Deserialize, Serialize};

use crate::distribution::IwParams;
use crate::error::{Error, Result};

/// Outcome of [`ks_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `P(K <= x)` for the Kolmogorov distribution.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // Jacobi theta form, fast for small x.
        let mut sum = 0.0;
        for k in 1..=200 {
            let j = (2 * k - 1) as f64;
            let term = (-j * j * std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        ((2.0 * std::f64::consts::PI).sqrt() / x * sum).clamp(0.0, 1.0)
    } else {
        (1.0 - kolmogorov_sf(x)).clamp(0.0, 1.0)
    }
}

/// `P(K > x)`, summed directly for large `x` so that tiny p-values keep
/// their relative accuracy.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 1.0 {
        return 1.0 - kolmogorov_cdf(x);
    }
    let mut sum = 0.0;
    for k in 1..=200u32 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 * sum.abs() {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Largest gap between the empirical distribution function of `data` and `cdf`.
pub fn ks_statistic(data: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Input("the K-S test needs at least one observation".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &t) in sorted.iter().enumerate() {
        let f = cdf(t)?;
        let i = i as f64;
        d = d.max((i + 1.0) / n - f).max(f - i / n);
    }
    Ok(d)
}

/// One-sample K-S test of `data` against the law `params`.
pub fn ks_test(data: &[f64], params: &IwParams) -> Result<KsResult> {
    let statistic = ks_statistic(data, |t| params.cdf(t))?;
    let n = data.len();
    let p_value = kolmogorov_sf((n as f64).sqrt() * statistic);
    Ok(KsResult { statistic, p_value, n })
}

/// One row of the empirical-versus-fitted comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub x: f64,
    pub empirical: f64,
    pub fitted: f64,
}

/// `(t_(i), i/n, F(t_(i)))` for every order statistic, for external plotting.
pub fn ecdf_table(data: &[f64], params: &IwParams) -> Result<Vec<EcdfPoint>> {
    if data.is_empty() {
        return Err(Error::Input("no data".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| Ok(EcdfPoint { x, empirical: (i + 1) as f64 / n, fitted: params.cdf(x)? }))
        .collect()
}
