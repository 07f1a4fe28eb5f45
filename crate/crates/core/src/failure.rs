//! Failure-time distribution induced by the damage process.
//!
//! With failure at damage level 1, `S(t) = P(Y_t <= 1) = P(eta_t, 1/xi)`
//! (lower regularized incomplete gamma). The density is
//!
//! ```text
//! f(t) = eta' [ (psi(eta) - ln(1/xi)) S(t) + (1/xi)^eta / (eta^2 Gamma(eta)) 2F2(eta, eta; eta+1, eta+1; -1/xi) ]
//! ```
//!
//! evaluated with the power/gamma prefactor in log space.

use crate::error::{DolError, Result};
use crate::profile::LoadProfile;
use crate::shape::{DegradationParams, EtaMode, LoadGrid, ShapeEvaluator};
use crate::specfn::{digamma, ln_gamma, ln_hyp2f2_family, reg_inc_gamma_pair};

/// Damage level at which a piece fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureThreshold {
    pub level: f64,
}

impl FailureThreshold {
    pub const UNIT: Self = Self { level: 1.0 };
}

fn check_scale(xi: f64) -> Result<()> {
    if xi > 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(DolError::domain(format!(
            "scale xi must be finite and > 0, got {xi}"
        )))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta >= 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(DolError::domain(format!(
            "eta must be finite and >= 0, got {eta}"
        )))
    }
}

/// `P[T > t]` given `eta_t`.
pub fn survival(params: &DegradationParams, eta_t: f64) -> Result<f64> {
    survival_from_eta(params.xi, eta_t)
}

pub fn survival_from_eta(xi: f64, eta_t: f64) -> Result<f64> {
    check_scale(xi)?;
    check_eta(eta_t)?;
    if eta_t == 0.0 {
        return Ok(1.0);
    }
    Ok(reg_inc_gamma_pair(eta_t, 1.0 / xi)?.0)
}

/// Density from `eta_t`, `eta_dot_t` and `xi`. Zero when `eta_t = 0`.
pub fn density_from_eta(xi: f64, eta: f64, eta_dot: f64) -> Result<f64> {
    check_scale(xi)?;
    check_eta(eta)?;
    if eta == 0.0 || eta_dot == 0.0 {
        return Ok(0.0);
    }
    if !(eta_dot > 0.0) {
        return Err(DolError::domain(format!(
            "eta_dot must be >= 0, got {eta_dot}"
        )));
    }
    let x = 1.0 / xi;
    let s = reg_inc_gamma_pair(eta, x)?.0;
    let first = (digamma(eta)? - x.ln()) * s;
    let ln_second = eta * x.ln() - 2.0 * eta.ln() - ln_gamma(eta)? + ln_hyp2f2_family(eta, x)?;
    let f = eta_dot * (first + ln_second.exp());
    Ok(f.max(0.0))
}

/// Failure-time model for one parameter vector and load profile.
#[derive(Debug, Clone)]
pub struct FailureModel {
    params: DegradationParams,
    shape: ShapeEvaluator,
    increments: Vec<f64>,
    mode: EtaMode,
}

impl FailureModel {
    pub fn new(params: &DegradationParams, grid: &LoadGrid, profile: &LoadProfile) -> Result<Self> {
        params.validate()?;
        Ok(Self::with_shape(
            params,
            ShapeEvaluator::new(grid, profile)?,
        ))
    }

    /// Reuses an existing shape evaluator (and its exceedance cache).
    pub fn with_shape(params: &DegradationParams, shape: ShapeEvaluator) -> Self {
        let increments = shape.grid().increments(params);
        Self {
            params: *params,
            shape,
            increments,
            mode: EtaMode::Pointwise,
        }
    }

    pub fn with_mode(mut self, mode: EtaMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> EtaMode {
        self.mode
    }

    pub fn params(&self) -> &DegradationParams {
        &self.params
    }

    pub fn profile(&self) -> &LoadProfile {
        self.shape.profile()
    }

    pub fn horizon(&self) -> f64 {
        self.shape.profile().horizon()
    }

    pub fn eta(&self, t: f64) -> Result<f64> {
        self.shape
            .eta_with(&self.params, &self.increments, t, self.mode)
    }

    pub fn eta_and_rate(&self, t: f64) -> Result<(f64, f64)> {
        self.shape
            .eta_and_rate_with(&self.params, &self.increments, t, self.mode)
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        survival_from_eta(self.params.xi, self.eta(t)?)
    }

    /// Density at `t`; the right limit at crossing instants.
    pub fn density(&self, t: f64) -> Result<f64> {
        let (eta, rate) = self.eta_and_rate(t)?;
        density_from_eta(self.params.xi, eta, rate)
    }

    pub fn cdf_curve(&self, times: &[f64]) -> Result<Vec<f64>> {
        check_sorted(times)?;
        times.iter().map(|&t| Ok(1.0 - self.survival(t)?)).collect()
    }

    /// `P[T > t' + t_r | T > t']`.
    pub fn residual_survivor(&self, t_prime: f64, t_r: f64) -> Result<f64> {
        if !(t_r >= 0.0) {
            return Err(DolError::domain(format!("t_r must be >= 0, got {t_r}")));
        }
        let base = self.survival(t_prime)?;
        if base <= 0.0 {
            return Err(DolError::NullConditioning { t: t_prime });
        }
        if t_r == 0.0 {
            return Ok(1.0);
        }
        Ok((self.survival(t_prime + t_r)? / base).min(1.0))
    }

    pub fn residual_curve(&self, t_prime: f64, t_rs: &[f64]) -> Result<Vec<f64>> {
        check_sorted(t_rs)?;
        let base = self.survival(t_prime)?;
        if base <= 0.0 {
            return Err(DolError::NullConditioning { t: t_prime });
        }
        t_rs.iter()
            .map(|&r| {
                if r == 0.0 {
                    Ok(1.0)
                } else {
                    Ok((self.survival(t_prime + r)? / base).min(1.0))
                }
            })
            .collect()
    }

    /// Median residual life after surviving to `t_prime`, searched up to the profile horizon.
    pub fn residual_median(&self, t_prime: f64) -> Result<f64> {
        let base = self.survival(t_prime)?;
        if base <= 0.0 {
            return Err(DolError::NullConditioning { t: t_prime });
        }
        let span = self.horizon() - t_prime;
        if !(span > 0.0) {
            return Err(DolError::domain("profile must extend beyond t_prime"));
        }
        let ratio = |r: f64| -> Result<f64> { Ok(self.survival(t_prime + r)? / base) };
        if ratio(span)? > 0.5 {
            return Err(DolError::MedianBeyondHorizon {
                horizon: self.horizon(),
            });
        }
        let (mut lo, mut hi) = (0.0, span);
        while hi - lo > 1e-8 * hi {
            let mid = 0.5 * (lo + hi);
            if ratio(mid)? > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi < 1e-300 {
                break;
            }
        }
        Ok(hi)
    }
}

fn check_sorted(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(DolError::domain("times must be sorted ascending"));
    }
    Ok(())
}

/// Failure-time density at `t`.
pub fn density(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    t: f64,
) -> Result<f64> {
    FailureModel::new(params, grid, profile)?.density(t)
}

/// `P[T <= t]` at each of the sorted `times`.
pub fn cdf_curve(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    times: &[f64],
) -> Result<Vec<f64>> {
    FailureModel::new(params, grid, profile)?.cdf_curve(times)
}

/// Survivor function of the residual life `T - t'` given `T > t'`.
pub fn residual_survivor(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    t_prime: f64,
    t_r: f64,
) -> Result<f64> {
    FailureModel::new(params, grid, profile)?.residual_survivor(t_prime, t_r)
}

/// Median residual life, in hours.
pub fn residual_median(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    t_prime: f64,
) -> Result<f64> {
    FailureModel::new(params, grid, profile)?.residual_median(t_prime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{constant_profile, ramp_then_constant, LoadSegment};
    use crate::{HOURS_PER_YEAR, TEST_RAMP_RATE};

    const MEANS: DegradationParams = DegradationParams::HEMLOCK_MEANS;

    #[test]
    fn survival_examples() {
        assert_eq!(survival(&MEANS, 0.0).unwrap(), 1.0);
        let want = 1.0 - (-1.0f64 / 0.21).exp();
        assert!((survival(&MEANS, 1.0).unwrap() - want).abs() < 1e-15);
        assert!((survival(&MEANS, 1.0).unwrap() - 0.99145).abs() < 1e-5);
        assert!(survival(&MEANS, -1.0).is_err());
        let bad = DegradationParams { xi: 0.0, ..MEANS };
        assert!(survival(&bad, 1.0).is_err());
    }

    #[test]
    fn survival_decreases_in_eta() {
        let mut prev = 1.0;
        for k in 1..200 {
            let s = survival(&MEANS, 0.05 * k as f64).unwrap();
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn density_matches_survival_derivative_at_4500() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 4500.0, HOURS_PER_YEAR).unwrap();
        let g = LoadGrid::uniform(20.0, p.max_load()).unwrap();
        let m = FailureModel::new(&MEANS, &g, &p).unwrap();
        let (t, h) = (100.0, 1e-3);
        let fd = -(m.survival(t + h).unwrap() - m.survival(t - h).unwrap()) / (2.0 * h);
        let f = m.density(t).unwrap();
        assert!(((f - fd) / fd).abs() < 1e-5, "{f} vs {fd}");
    }

    #[test]
    fn density_zero_below_threshold() {
        let p = constant_profile(400.0, 100.0).unwrap();
        let g = LoadGrid::uniform(20.0, 400.0).unwrap();
        assert_eq!(density(&MEANS, &g, &p, 50.0).unwrap(), 0.0);
    }

    #[test]
    fn residual_life_basics() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 3000.0, 200.0 * HOURS_PER_YEAR).unwrap();
        let g = LoadGrid::uniform(20.0, p.max_load()).unwrap();
        let m = FailureModel::new(&MEANS, &g, &p).unwrap();
        let tp = 4.0 * HOURS_PER_YEAR;
        assert_eq!(m.residual_survivor(tp, 0.0).unwrap(), 1.0);
        let r = m.residual_median(tp).unwrap();
        assert!((m.residual_survivor(tp, r).unwrap() - 0.5).abs() < 1e-6);
        let curve = m.residual_curve(tp, &[0.0, 1e3, 1e4, 1e5]).unwrap();
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn median_beyond_horizon_is_reported() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 3000.0, 5.0 * HOURS_PER_YEAR).unwrap();
        let g = LoadGrid::uniform(20.0, p.max_load()).unwrap();
        let err = residual_median(&MEANS, &g, &p, 4.0 * HOURS_PER_YEAR).unwrap_err();
        assert!(matches!(err, DolError::MedianBeyondHorizon { .. }));
    }

    #[test]
    fn immediate_failure_after_load_jump() {
        let tp = 100.0;
        let p = LoadProfile::new(vec![
            LoadSegment::constant(0.0, tp, 100.0),
            LoadSegment::constant(tp, 200.0, 100_000.0),
        ])
        .unwrap();
        let g = LoadGrid::uniform(20.0, p.max_load()).unwrap();
        let r = residual_median(&MEANS, &g, &p, tp).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn conditioning_on_null_event_fails() {
        let p = constant_profile(1e6, 10.0).unwrap();
        let g = LoadGrid::uniform(1000.0, p.max_load()).unwrap();
        let err = residual_survivor(&MEANS, &g, &p, 9.0, 0.5).unwrap_err();
        assert!(matches!(err, DolError::NullConditioning { .. }));
    }

    #[test]
    fn cdf_curve_is_sorted() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 4500.0, HOURS_PER_YEAR).unwrap();
        let g = LoadGrid::uniform(20.0, p.max_load()).unwrap();
        let times: Vec<f64> = (0..50).map(|k| (k as f64).powi(3) * 0.07).collect();
        let cdf = cdf_curve(&MEANS, &g, &p, &times).unwrap();
        assert_eq!(cdf[0], 0.0);
        assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
        assert!(cdf_curve(&MEANS, &g, &p, &[2.0, 1.0]).is_err());
    }
}
