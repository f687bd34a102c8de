//! Type-I hybrid censoring.
//!
//! `n` units go on test and the experiment stops at `u = min(t_(R), T)`.
//! The observed data are the `r` failure times not exceeding `u` plus the
//! knowledge that `n - r` units were still running at `u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Type-I hybrid censoring plan: `n` units, failure budget `R`, time budget `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridScheme {
    n: usize,
    big_r: usize,
    time: f64,
}

impl HybridScheme {
    /// `time` may be `f64::INFINITY`, which turns the plan into pure Type-II
    /// censoring (and into a complete sample when `big_r == n`).
    pub fn new(n: usize, big_r: usize, time: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("a scheme needs at least one unit on test".into()));
        }
        if big_r == 0 || big_r > n {
            return Err(Error::Input(format!("failure budget R={big_r} must satisfy 1 <= R <= n={n}")));
        }
        if time.is_nan() || time <= 0.0 {
            return Err(Error::Input(format!("time budget T must be positive, got {time}")));
        }
        Ok(Self { n, big_r, time })
    }

    /// Plan under which no censoring can bind.
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, n, f64::INFINITY)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_r(&self) -> usize {
        self.big_r
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// Observed failures of a hybrid censored experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridSample {
    times: Vec<f64>,
    u: f64,
    scheme: HybridScheme,
}

impl HybridSample {
    /// Ordered observed failure times `t_(1) <= ... <= t_(r)`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of observed failures.
    pub fn r(&self) -> usize {
        self.times.len()
    }

    pub fn n(&self) -> usize {
        self.scheme.n
    }

    /// Censoring terminus `u = min(t_(R), T)`.
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn scheme(&self) -> &HybridScheme {
        &self.scheme
    }

    /// True when every unit failed, so the censoring term of the likelihood vanishes.
    pub fn is_complete(&self) -> bool {
        self.r() == self.n()
    }

    /// True when the experiment stopped at the R-th failure rather than at T.
    pub fn stopped_by_failures(&self) -> bool {
        self.r() == self.scheme.big_r && self.u <= self.scheme.time
    }
}

/// Applies `scheme` to a complete sample of `n` lifetimes.
///
/// A failure exactly at `T` counts as observed. When the `R`-th ordered
/// lifetime does not exceed `T` the experiment stops there and exactly `R`
/// failures are recorded, even if later units tie with `t_(R)`.
pub fn apply_scheme(complete_times: &[f64], scheme: &HybridScheme) -> Result<HybridSample> {
    if complete_times.len() != scheme.n {
        return Err(Error::Input(format!("scheme expects n={} lifetimes, got {}", scheme.n, complete_times.len())));
    }
    if let Some(bad) = complete_times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Input(format!("lifetimes must be positive and finite, got {bad}")));
    }
    let mut sorted = complete_times.to_vec();
    sorted.sort_by(f64::total_cmp);

    let t_r = sorted[scheme.big_r - 1];
    let (times, u) = if t_r <= scheme.time {
        sorted.truncate(scheme.big_r);
        (sorted, t_r)
    } else {
        let r = sorted.partition_point(|&t| t <= scheme.time);
        sorted.truncate(r);
        (sorted, scheme.time)
    };
    Ok(HybridSample { times, u, scheme: *scheme })
}

/// Observed failures on the reciprocal scale `x_i = 1 / t_(i)`, the form in
/// which the likelihood is written.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalSample {
    x: Vec<f64>,
    ln_x: Vec<f64>,
    sum_ln_x: f64,
    u: f64,
    n: usize,
}

impl ReciprocalSample {
    /// Builds a reciprocal sample directly. `x` must be nonincreasing with every
    /// entry at least `1/u`.
    pub fn new(x: Vec<f64>, u: f64, n: usize) -> Result<Self> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::Domain(format!("censoring terminus must be positive and finite, got {u}")));
        }
        if x.len() > n {
            return Err(Error::Input(format!("{} failures exceed n={n}", x.len())));
        }
        if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain("reciprocal failure times must be positive and finite".into()));
        }
        if x.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Input("reciprocal failure times must be nonincreasing".into()));
        }
        let floor = 1.0 / u;
        if x.last().is_some_and(|&last| last < floor * (1.0 - 1e-12)) {
            return Err(Error::Input("a failure time exceeds the censoring terminus".into()));
        }
        let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let sum_ln_x = ln_x.iter().sum();
        Ok(Self { x, ln_x, sum_ln_x, u, n })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn ln_x(&self) -> &[f64] {
        &self.ln_x
    }

    pub fn sum_ln_x(&self) -> f64 {
        self.sum_ln_x
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn r(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of units still running at `u`.
    pub fn censored(&self) -> usize {
        self.n - self.x.len()
    }

    /// Maps the reciprocals back to ascending failure times.
    pub fn failure_times(&self) -> Vec<f64> {
        self.x.iter().map(|v| 1.0 / v).collect()
    }
}

/// `x_i = 1 / t_(i)` in the order of the observed times.
pub fn reciprocals(sample: &HybridSample) -> Result<ReciprocalSample> {
    if sample.times.iter().any(|&t| t <= 0.0) {
        return Err(Error::Domain("failure times must be positive".into()));
    }
    let x = sample.times.iter().map(|t| 1.0 / t).collect();
    ReciprocalSample::new(x, sample.u, sample.n())
}
