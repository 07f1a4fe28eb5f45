//! Posterior predictions: failure probability at a horizon, `eta_t` bands and
//! residual-life summaries, each computed draw by draw.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DolError, Result};
use crate::failure::FailureModel;
use crate::inference::{quantile_sorted, summarize_column, SummaryRow};
use crate::profile::LoadProfile;
use crate::shape::{DegradationParams, EtaMode, LoadGrid, ShapeEvaluator};

/// Pointwise mean and central 95% band of a family of curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBand {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CurveBand {
    pub fn from_curves(times: &[f64], curves: &[Vec<f64>]) -> Result<Self> {
        if curves.is_empty() {
            return Err(DolError::domain("no curves to summarize"));
        }
        let n = times.len();
        let (mut mean, mut lo, mut hi) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        let mut col = Vec::with_capacity(curves.len());
        for j in 0..n {
            col.clear();
            col.extend(curves.iter().map(|c| c[j]));
            mean.push(col.iter().sum::<f64>() / col.len() as f64);
            col.sort_by(f64::total_cmp);
            lo.push(quantile_sorted(&col, 0.025));
            hi.push(quantile_sorted(&col, 0.975));
        }
        Ok(Self {
            times: times.to_vec(),
            mean,
            lo,
            hi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub horizon: f64,
    /// failure probability by the horizon, one per draw
    pub probabilities: Vec<f64>,
    pub summary: SummaryRow,
    /// `eta_t` under the highest-posterior draw
    pub eta_best: Vec<f64>,
    pub eta_band: CurveBand,
}

/// Per-draw `P[T <= horizon]` from `eta` at the horizon, plus the `eta_t`
/// curve of the best draw and the posterior band at `times`.
pub fn reliability(
    draws: &[(DegradationParams, f64)],
    grid: &LoadGrid,
    profile: &LoadProfile,
    times: &[f64],
) -> Result<ReliabilityReport> {
    if draws.is_empty() {
        return Err(DolError::domain("posterior has no draws"));
    }
    let shape = ShapeEvaluator::new(grid, profile)?;
    let horizon = profile.horizon();
    let per_draw: Vec<Result<(f64, Vec<f64>)>> = draws
        .par_iter()
        .map(|(theta, _)| {
            let model = FailureModel::with_shape(theta, shape.clone());
            let p = 1.0 - model.survival(horizon)?;
            let eta = times
                .iter()
                .map(|&t| model.eta(t))
                .collect::<Result<Vec<_>>>()?;
            Ok((p, eta))
        })
        .collect();
    let mut probabilities = Vec::with_capacity(draws.len());
    let mut curves = Vec::with_capacity(draws.len());
    for r in per_draw {
        let (p, eta) = r?;
        probabilities.push(p);
        curves.push(eta);
    }
    let best = draws
        .iter()
        .enumerate()
        .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(ReliabilityReport {
        horizon,
        summary: summarize_column("P(fail)", &probabilities)?,
        probabilities,
        eta_best: curves[best].clone(),
        eta_band: CurveBand::from_curves(times, &curves)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub t_prime: f64,
    /// residual medians (hours) of the draws where one was found
    pub medians: Vec<f64>,
    /// draws whose survival at `t_prime` is zero
    pub excluded_null: usize,
    /// draws whose median lies beyond the profile horizon
    pub beyond_horizon: usize,
    pub median_summary: Option<SummaryRow>,
    pub survivor_band: CurveBand,
}

/// Residual-life survivor curves at `t_rs` and residual medians for every
/// draw that survives to `t_prime` with positive probability.
pub fn residual_life(
    draws: &[DegradationParams],
    grid: &LoadGrid,
    profile: &LoadProfile,
    t_prime: f64,
    t_rs: &[f64],
    mode: EtaMode,
) -> Result<ResidualReport> {
    if draws.is_empty() {
        return Err(DolError::domain("posterior has no draws"));
    }
    let shape = ShapeEvaluator::new(grid, profile)?;
    enum Outcome {
        Null,
        Done(Vec<f64>, Option<f64>),
    }
    let per_draw: Vec<Result<Outcome>> = draws
        .par_iter()
        .map(|theta| {
            let model = FailureModel::with_shape(theta, shape.clone()).with_mode(mode);
            let curve = match model.residual_curve(t_prime, t_rs) {
                Ok(c) => c,
                Err(DolError::NullConditioning { .. }) => return Ok(Outcome::Null),
                Err(e) => return Err(e),
            };
            let median = match model.residual_median(t_prime) {
                Ok(m) => Some(m),
                Err(DolError::MedianBeyondHorizon { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(Outcome::Done(curve, median))
        })
        .collect();
    let (mut curves, mut medians) = (Vec::new(), Vec::new());
    let (mut excluded_null, mut beyond_horizon) = (0, 0);
    for r in per_draw {
        match r? {
            Outcome::Null => excluded_null += 1,
            Outcome::Done(c, m) => {
                curves.push(c);
                match m {
                    Some(m) => medians.push(m),
                    None => beyond_horizon += 1,
                }
            }
        }
    }
    if curves.is_empty() {
        return Err(DolError::NullConditioning { t: t_prime });
    }
    let median_summary = if medians.is_empty() {
        None
    } else {
        Some(summarize_column("median t_r", &medians)?)
    };
    Ok(ResidualReport {
        t_prime,
        medians,
        excluded_null,
        beyond_horizon,
        median_summary,
        survivor_band: CurveBand::from_curves(t_rs, &curves)?,
    })
}
