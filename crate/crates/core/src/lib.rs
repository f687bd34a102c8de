//! Inverse Weibull inference under Type-I hybrid censoring.
//!
//! Maximum likelihood with asymptotic intervals, Lindley's approximation,
//! importance-sampling posterior summaries with HPD intervals, a
//! Kolmogorov-Smirnov check and a Monte Carlo study harness.

pub mod censoring;
pub mod datasets;
pub mod distribution;
pub mod error;
pub mod gof;
pub mod harness;
pub mod lindley;
pub mod mle;
pub mod posterior;
pub mod seed;

pub use censoring::{apply_scheme, reciprocals, HybridSample, HybridScheme, ReciprocalSample};
pub use distribution::{rate_from_scale, scale_from_rate, IwParams};
pub use error::{Error, Result};
pub use gof::{ks_test, KsResult};
pub use harness::{run_study, SimulationSummary, StudyConfig};
pub use lindley::{lindley_estimates, GammaPriors, LindleyEstimate};
pub use mle::{
    asymptotic_ci, fit_mle, log_likelihood, score, AsymptoticIntervals, ConfidenceInterval, MleFit, SolverConfig,
};
pub use posterior::{bayes_is, BayesEstimate, BayesIsResult, IsConfig, PosteriorDraws};
