use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::likelihood::{PreparedData, PriorSpec};
use super::optimize::nelder_mead;
use super::tempering::{run_tempering, LogTarget, PTConfig};
use crate::error::{DolError, Result};
use crate::shape::{DegradationParams, LoadGrid};

/// Eq.-8 posterior over `[a, b, c, u, v, xi]`.
pub struct PosteriorTarget<'a> {
    pub data: &'a PreparedData,
    pub prior: PriorSpec,
}

impl LogTarget for PosteriorTarget<'_> {
    fn dim(&self) -> usize {
        6
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let theta = DegradationParams::from_array([x[0], x[1], x[2], x[3], x[4], x[5]]);
        self.data.log_posterior(&theta, &self.prior)
    }
}

/// Neutral starting point for the optimizer when none is configured.
pub const DEFAULT_START: DegradationParams = DegradationParams {
    a: 0.05,
    b: 0.02,
    c: 0.5,
    u: 0.001,
    v: 0.3,
    xi: 0.3,
};

/// Nelder–Mead on the posterior in natural coordinates, with support
/// violations treated as `+inf` in the negated objective.
pub fn nelder_mead_prepared(
    data: &PreparedData,
    prior: &PriorSpec,
    start: &DegradationParams,
    iters: usize,
) -> Result<DegradationParams> {
    start.validate()?;
    let target = PosteriorTarget {
        data,
        prior: *prior,
    };
    let (x, _) = nelder_mead(|x| -target.log_density(x), &start.to_array(), 0.1, iters)?;
    Ok(DegradationParams::from_array([
        x[0], x[1], x[2], x[3], x[4], x[5],
    ]))
}

pub fn nelder_mead_init(
    grid: &LoadGrid,
    data: &Dataset,
    start: &DegradationParams,
    iters: usize,
) -> Result<DegradationParams> {
    let prepared = PreparedData::new(grid, data)?;
    nelder_mead_prepared(&prepared, &PriorSpec::default(), start, iters)
}

/// Draws of the temperature-1 chain plus sampler diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub draws: Vec<DegradationParams>,
    pub log_post: Vec<f64>,
    pub acceptance: Vec<f64>,
    pub swap_rates: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub init: DegradationParams,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Draws of one parameter (`0..6` in [`DegradationParams::NAMES`] order).
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.to_array()[j]).collect()
    }
}

/// Nelder–Mead initialization from `start`, then parallel tempering.
pub fn run_parallel_tempering(
    grid: &LoadGrid,
    data: &Dataset,
    prior: &PriorSpec,
    config: &PTConfig,
    start: Option<&DegradationParams>,
) -> Result<PosteriorSamples> {
    config.validate()?;
    if data.is_empty() {
        return Err(DolError::config("dataset has no records"));
    }
    let prepared = PreparedData::new(grid, data)?;
    run_parallel_tempering_prepared(&prepared, prior, config, start)
}

pub fn run_parallel_tempering_prepared(
    prepared: &PreparedData,
    prior: &PriorSpec,
    config: &PTConfig,
    start: Option<&DegradationParams>,
) -> Result<PosteriorSamples> {
    config.validate()?;
    prior.validate()?;
    if prepared.n_records() == 0 {
        return Err(DolError::config("dataset has no records"));
    }
    let start = start.copied().unwrap_or(DEFAULT_START);
    if !prepared.log_posterior(&start, prior).is_finite() {
        return Err(DolError::numeric(format!(
            "log posterior is not finite at the starting point {start:?}"
        )));
    }
    let init = nelder_mead_prepared(prepared, prior, &start, config.init_iters)?;
    let target = PosteriorTarget {
        data: prepared,
        prior: *prior,
    };
    let trace = run_tempering(&target, &init.to_array(), config)?;
    let draws = trace
        .draws
        .iter()
        .map(|x| DegradationParams::from_array([x[0], x[1], x[2], x[3], x[4], x[5]]))
        .collect();
    Ok(PosteriorSamples {
        draws,
        log_post: trace.log_target,
        acceptance: trace.acceptance,
        swap_rates: trace.swap_rates,
        temperatures: trace.temperatures,
        init,
    })
}
