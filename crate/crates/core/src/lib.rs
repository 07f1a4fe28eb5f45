//! Gamma-process model of the duration-of-load (DOL) effect in lumber.
//!
//! Damage in a piece of lumber is a gamma process `Y_t` with scale `xi` and a
//! load-history-driven shape `eta_t`; the piece fails when `Y_t` reaches 1.
//! The crate covers:
//!
//! - [`specfn`]: log-gamma, digamma, regularized incomplete gamma and the
//!   `2F2` series needed by the failure-time density.
//! - [`profile`]: piecewise load histories, exceedance times and profile
//!   generators (test protocols and a stochastic residential load).
//! - [`shape`]: the shape function `eta_t` and its time derivative.
//! - [`failure`]: survival, density, CDF curves and residual life.
//! - [`inference`]: censored likelihood, posterior, Nelder-Mead start,
//!   parallel-tempering sampler and posterior summaries.
//! - [`simulate`]: sample paths, failure-time draws and synthetic experiments.
//! - [`adm`]: the Canadian accumulated damage model used as a comparator.
//! - [`io`]: CSV and JSON formats shared with the command-line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adm;
pub mod error;
pub mod failure;
pub mod inference;
pub mod io;
pub mod predict;
pub mod profile;
pub mod shape;
pub mod simulate;
pub mod specfn;

pub use error::{DolError, Result};
pub use profile::{LoadProfile, LoadSegment, ResidentialConfig, SegmentKind};
pub use shape::{DegradationParams, EtaMode, LoadGrid};

/// Hours in one year. All public time quantities are in hours.
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Load rate of the accelerated test protocols, psi per hour.
pub const TEST_RAMP_RATE: f64 = 388_440.0;

/// Load-level spacing used for the shape function, psi.
pub const DEFAULT_GRID_SPACING: f64 = 20.0;
