//! Bayesian inference from censored accelerated-test data.
//!
//! The posterior combines the failure density at every observed failure and
//! the survival probability at every censoring time with vague normal priors.
//! Sampling is by parallel tempering, started from a Nelder–Mead optimum.

mod data;
mod likelihood;
mod optimize;
mod posterior;
mod summary;
mod tempering;

pub use data::{Dataset, FailureRecord};
pub use likelihood::{
    log_likelihood, log_posterior, LikelihoodDiagnostic, PreparedData, PriorSpec,
};
pub use optimize::nelder_mead;
pub use posterior::{
    nelder_mead_init, nelder_mead_prepared, run_parallel_tempering,
    run_parallel_tempering_prepared, PosteriorSamples, PosteriorTarget, DEFAULT_START,
};
pub use summary::{
    quantile_sorted, summarize, summarize_column, summarize_draws, PosteriorSummary, SummaryRow,
};
pub use tempering::{run_tempering, ChainTrace, LogTarget, PTConfig};
