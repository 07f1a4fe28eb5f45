//! Scalar special functions used by the failure-time distribution.
//!
//! Everything here is a pure function of its arguments. Non-finite or
//! out-of-domain inputs are rejected with [`DolError::Domain`] rather than
//! propagated as NaN.

mod gamma;
mod hypergeometric;
mod incgamma;

pub use gamma::{digamma, ln_gamma};
pub use hypergeometric::{hyp2f2, hyp2f2_with, ln_hyp2f2_family};
pub use incgamma::{reg_inc_gamma_pair, reg_inc_gamma_pair_with, reg_upper_inc_gamma};

use crate::error::{DolError, Result};

/// Convergence controls for series and continued-fraction evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl AccuracyReport {
    pub fn new(abs_tol: f64, rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_terms == 0 {
            return Err(DolError::domain(
                "accuracy requires abs_tol > 0, rel_tol > 0, max_terms >= 1",
            ));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_terms,
        })
    }
}

impl Default for AccuracyReport {
    fn default() -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: f64::EPSILON,
            max_terms: 100_000,
        }
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(DolError::domain(format!("{name} must be finite, got {x}")))
    }
}
