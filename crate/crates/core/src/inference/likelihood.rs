use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{DolError, Result};
use crate::failure::{density_from_eta, survival_from_eta};
use crate::shape::{DegradationParams, EtaMode, Exposure, LoadGrid, ShapeEvaluator};

/// Independent `Normal(mean, sd)` priors on the natural scale, restricted to
/// positive parameters with `a < c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mean: f64,
    pub sd: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            mean: 0.0,
            sd: 1000.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sd > 0.0 && self.sd.is_finite() && self.mean.is_finite() {
            Ok(())
        } else {
            Err(DolError::config(format!(
                "prior sd must be finite and > 0, got {}",
                self.sd
            )))
        }
    }

    /// Sum of the six normal log densities, or `-inf` outside the support.
    pub fn log_density(&self, theta: &DegradationParams) -> f64 {
        if !theta.in_support() || theta.a >= theta.c {
            return f64::NEG_INFINITY;
        }
        let norm = -0.5 * (2.0 * std::f64::consts::PI).ln() - self.sd.ln();
        theta
            .to_array()
            .iter()
            .map(|x| {
                let z = (x - self.mean) / self.sd;
                norm - 0.5 * z * z
            })
            .sum()
    }
}

/// Per-level cached exposure: grid index, `ln t~_i` and whether the load is
/// still at or above the level.
#[derive(Debug, Clone)]
struct Term {
    level: usize,
    ln_duration: f64,
    active: bool,
}

/// `eta` at a record time: a single exposure, or a straight line between
/// the exposures at the ends of a ramp stretch.
#[derive(Debug, Clone)]
enum EtaForm {
    Point(Vec<Term>),
    Line {
        start: Vec<Term>,
        end: Vec<Term>,
        frac: f64,
        width: f64,
    },
}

#[derive(Debug, Clone)]
struct Group {
    profile_id: String,
    time: f64,
    censored: bool,
    count: f64,
    form: EtaForm,
}

fn cache_terms(exposure: &Exposure) -> Vec<Term> {
    exposure
        .terms
        .iter()
        .map(|t| Term {
            level: t.level,
            ln_duration: if t.duration > 0.0 {
                t.duration.ln()
            } else {
                f64::NEG_INFINITY
            },
            active: t.active,
        })
        .collect()
}

/// `(eta, eta_dot)` from cached terms; the rate is skipped when not needed.
fn eta_terms(
    terms: &[Term],
    theta: &DegradationParams,
    inc: &[f64],
    want_rate: bool,
) -> (f64, f64) {
    let (mut eta, mut rate) = (0.0, 0.0);
    for term in terms {
        let d = inc[term.level];
        if d == 0.0 {
            continue;
        }
        if term.ln_duration == f64::NEG_INFINITY {
            if term.active && want_rate {
                rate += d * zero_duration_rate(theta);
            }
            continue;
        }
        let sa = (theta.a * term.ln_duration).exp();
        let sc = theta.b * (theta.c * term.ln_duration).exp();
        eta += (sa + sc) * d;
        if term.active && want_rate {
            rate += (theta.a * sa + theta.c * sc) * (-term.ln_duration).exp() * d;
        }
    }
    (eta, rate)
}

/// Dataset with every parameter-free quantity of the likelihood precomputed.
/// Identical records share one evaluation.
#[derive(Debug, Clone)]
pub struct PreparedData {
    grid: LoadGrid,
    mode: EtaMode,
    groups: Vec<Group>,
    n_records: usize,
}

/// Which record made the log-likelihood non-finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodDiagnostic {
    pub profile_id: String,
    pub time: f64,
    pub censored: bool,
    pub value: f64,
}

impl PreparedData {
    /// Prepared with ramp-smoothed `eta`, matching the simulator.
    pub fn new(grid: &LoadGrid, data: &Dataset) -> Result<Self> {
        Self::with_mode(grid, data, EtaMode::RampSmoothed)
    }

    pub fn with_mode(grid: &LoadGrid, data: &Dataset, mode: EtaMode) -> Result<Self> {
        data.validate()?;
        let mut shapes = HashMap::new();
        for (id, p) in &data.profiles {
            shapes.insert(id.as_str(), ShapeEvaluator::new(grid, p)?);
        }
        let mut index: HashMap<(String, u64, bool), usize> = HashMap::new();
        let mut groups: Vec<Group> = Vec::new();
        for rec in &data.records {
            let key = (rec.profile_id.clone(), rec.time.to_bits(), rec.censored);
            if let Some(&g) = index.get(&key) {
                groups[g].count += 1.0;
                continue;
            }
            let shape = &shapes[rec.profile_id.as_str()];
            let form = match shape.ramp_interval(rec.time) {
                Some((t0, t1)) if mode == EtaMode::RampSmoothed => EtaForm::Line {
                    start: cache_terms(&shape.exposure(t0)?),
                    end: cache_terms(&shape.exposure(t1)?),
                    frac: (rec.time - t0) / (t1 - t0),
                    width: t1 - t0,
                },
                _ => EtaForm::Point(cache_terms(&shape.exposure(rec.time)?)),
            };
            index.insert(key, groups.len());
            groups.push(Group {
                profile_id: rec.profile_id.clone(),
                time: rec.time,
                censored: rec.censored,
                count: 1.0,
                form,
            });
        }
        Ok(Self {
            grid: grid.clone(),
            mode,
            groups,
            n_records: data.records.len(),
        })
    }

    pub fn n_records(&self) -> usize {
        self.n_records
    }

    pub fn n_distinct(&self) -> usize {
        self.groups.len()
    }

    pub fn mode(&self) -> EtaMode {
        self.mode
    }

    fn group_term(&self, g: &Group, theta: &DegradationParams, inc: &[f64]) -> f64 {
        let want_rate = !g.censored;
        let (eta, rate) = match &g.form {
            EtaForm::Point(terms) => eta_terms(terms, theta, inc, want_rate),
            EtaForm::Line {
                start,
                end,
                frac,
                width,
            } => {
                let e0 = eta_terms(start, theta, inc, false).0;
                let e1 = eta_terms(end, theta, inc, false).0;
                (e0 + frac * (e1 - e0), (e1 - e0) / width)
            }
        };
        let value = if g.censored {
            survival_from_eta(theta.xi, eta).map(f64::ln)
        } else {
            density_from_eta(theta.xi, eta, rate).map(f64::ln)
        };
        value.unwrap_or(f64::NAN)
    }

    /// `sum log f(t_i)` over failures plus `sum log S(t_c)` over censored records.
    /// Any non-finite term makes the result `-inf`; see [`PreparedData::diagnose`].
    pub fn log_likelihood(&self, theta: &DegradationParams) -> f64 {
        if !theta.in_support() {
            return f64::NEG_INFINITY;
        }
        let inc = self.grid.increments(theta);
        let mut total = 0.0;
        for g in &self.groups {
            let v = self.group_term(g, theta, &inc);
            if !v.is_finite() {
                return f64::NEG_INFINITY;
            }
            total += g.count * v;
        }
        total
    }

    /// The first record whose contribution is not finite.
    pub fn diagnose(&self, theta: &DegradationParams) -> Option<LikelihoodDiagnostic> {
        let inc = self.grid.increments(theta);
        self.groups.iter().find_map(|g| {
            let v = self.group_term(g, theta, &inc);
            (!v.is_finite()).then(|| LikelihoodDiagnostic {
                profile_id: g.profile_id.clone(),
                time: g.time,
                censored: g.censored,
                value: v,
            })
        })
    }

    pub fn log_posterior(&self, theta: &DegradationParams, prior: &PriorSpec) -> f64 {
        let lp = prior.log_density(theta);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + self.log_likelihood(theta)
    }
}

/// Right limit of `g'(s)` at `s = 0`.
fn zero_duration_rate(theta: &DegradationParams) -> f64 {
    let part = |coef: f64, exponent: f64| {
        if exponent < 1.0 {
            f64::INFINITY
        } else if exponent == 1.0 {
            coef
        } else {
            0.0
        }
    };
    part(theta.a, theta.a) + part(theta.b * theta.c, theta.c)
}

/// Log-likelihood with ramp-smoothed `eta`; see [`PreparedData::with_mode`].
pub fn log_likelihood(theta: &DegradationParams, grid: &LoadGrid, data: &Dataset) -> Result<f64> {
    theta.validate()?;
    Ok(PreparedData::new(grid, data)?.log_likelihood(theta))
}

pub fn log_posterior(
    theta: &DegradationParams,
    grid: &LoadGrid,
    data: &Dataset,
    prior: &PriorSpec,
) -> Result<f64> {
    prior.validate()?;
    if !theta.in_support() || theta.a >= theta.c {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(PreparedData::new(grid, data)?.log_posterior(theta, prior))
}
