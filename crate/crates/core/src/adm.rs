//! Canadian accumulated-damage model with lognormal piece effects, used as a
//! reference point for the gamma-process predictions.
//!
//! `alpha' = a [tau(t) - sigma0 tau_s]_+^b + c [tau(t) - sigma0 tau_s]_+^n alpha`
//! with loads in psi and time in hours. The model is not dimensionless; its
//! parameters only make sense in those fixed units.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DolError, Result};
use crate::profile::{LoadProfile, SegmentKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ADMPieceParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n: f64,
    pub sigma0: f64,
    /// short-term strength, psi
    pub tau_s: f64,
}

impl ADMPieceParams {
    pub fn validate(&self) -> Result<()> {
        let v = [self.a, self.b, self.c, self.n, self.sigma0, self.tau_s];
        // c = 0 is allowed: it switches off the damage-proportional term
        if v.iter().all(|x| x.is_finite() && *x >= 0.0)
            && self.a > 0.0
            && self.b > 0.0
            && self.tau_s > 0.0
        {
            Ok(())
        } else {
            Err(DolError::domain(format!(
                "invalid ADM piece parameters {self:?}"
            )))
        }
    }

    /// Load below which the piece accrues no damage, psi.
    pub fn threshold(&self) -> f64 {
        self.sigma0 * self.tau_s
    }

    fn rate(&self, load: f64, alpha: f64) -> f64 {
        let excess = load - self.threshold();
        if excess <= 0.0 {
            return 0.0;
        }
        self.a * excess.powf(self.b) + self.c * excess.powf(self.n) * alpha
    }
}

/// Parameters of a lognormal on the natural scale: `ln X ~ N(log_mean, log_sd^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalSpec {
    pub log_mean: f64,
    pub log_sd: f64,
}

impl LogNormalSpec {
    /// Lognormal with the given mean and coefficient of variation.
    pub fn from_mean_cv(mean: f64, cv: f64) -> Self {
        let s2 = (1.0 + cv * cv).ln();
        Self {
            log_mean: mean.ln() - 0.5 * s2,
            log_sd: s2.sqrt(),
        }
    }

    pub fn fixed(value: f64) -> Self {
        Self {
            log_mean: value.ln(),
            log_sd: 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        (self.log_mean + 0.5 * self.log_sd * self.log_sd).exp()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.log_sd == 0.0 {
            return self.log_mean.exp();
        }
        LogNormal::new(self.log_mean, self.log_sd)
            .expect("validated")
            .sample(rng)
    }
}

/// Population of pieces: independent lognormal effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ADMPopulationParams {
    pub a: LogNormalSpec,
    pub b: LogNormalSpec,
    pub c: LogNormalSpec,
    pub n: LogNormalSpec,
    pub sigma0: LogNormalSpec,
    pub tau_s: LogNormalSpec,
}

impl ADMPopulationParams {
    /// Illustrative configuration: `sigma0` has mean 0.533 and `tau_s` mean
    /// 6900 psi. `a` and `b` are set so a piece of median threshold fails near
    /// its short-term strength in a one-minute ramp test. Not a fitted set.
    pub fn illustrative() -> Self {
        Self {
            a: LogNormalSpec {
                log_mean: (1.4e-8f64).ln(),
                log_sd: 0.5,
            },
            b: LogNormalSpec::fixed(3.0),
            c: LogNormalSpec {
                log_mean: (1e-9f64).ln(),
                log_sd: 0.5,
            },
            n: LogNormalSpec::fixed(2.0),
            sigma0: LogNormalSpec::from_mean_cv(0.533, 0.12),
            tau_s: LogNormalSpec::from_mean_cv(6900.0, 0.22),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in self.fields() {
            if !p.log_mean.is_finite() || !(p.log_sd >= 0.0) || !p.log_sd.is_finite() {
                return Err(DolError::config(format!(
                    "ADM population '{name}': invalid lognormal {p:?}"
                )));
            }
        }
        Ok(())
    }

    fn fields(&self) -> [(&'static str, &LogNormalSpec); 6] {
        [
            ("a", &self.a),
            ("b", &self.b),
            ("c", &self.c),
            ("n", &self.n),
            ("sigma0", &self.sigma0),
            ("tau_s", &self.tau_s),
        ]
    }

    pub fn sample_piece<R: Rng + ?Sized>(&self, rng: &mut R) -> ADMPieceParams {
        ADMPieceParams {
            a: self.a.sample(rng),
            b: self.b.sample(rng),
            c: self.c.sample(rng),
            n: self.n.sample(rng),
            sigma0: self.sigma0.sample(rng),
            tau_s: self.tau_s.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmOutcome {
    /// hours; `None` if the piece survived the horizon
    pub failure_time: Option<f64>,
    /// damage at failure (1) or at the horizon
    pub final_alpha: f64,
}

/// Step-control tolerances of the integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmTolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for AdmTolerance {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-14,
        }
    }
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One DP step from `(t, y)`; returns the 5th-order value and the error estimate.
fn dp_step(f: &impl Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> (f64, f64) {
    let mut k = [0.0; 7];
    for i in 0..7 {
        let yi = y + h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
        k[i] = f(t + C[i] * h, yi);
    }
    let y5 = y + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
    let y4 = y + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
    (y5, (y5 - y4).abs())
}

/// Integrates `y' = f(t, y)` over `[t0, t1]` until `y >= 1`.
/// Returns `(t_end, y_end, failed)`.
fn integrate_piece(
    f: impl Fn(f64, f64) -> f64,
    t0: f64,
    t1: f64,
    y0: f64,
    tol: AdmTolerance,
) -> Result<(f64, f64, bool)> {
    let (mut t, mut y) = (t0, y0);
    let span = t1 - t0;
    let mut h = span;
    // initial step from the local rate
    let r0 = f(t0, y0);
    if r0 > 0.0 {
        h = h.min(0.01 / r0.max(1e-300) * (1.0 + y0)).max(span * 1e-12);
    }
    while t < t1 {
        h = h.min(t1 - t);
        let (y_new, err) = dp_step(&f, t, y, h);
        let scale = tol.abs + tol.rel * y.abs().max(y_new.abs());
        let ratio = err / scale;
        if ratio <= 1.0 && y_new.is_finite() {
            if y_new >= 1.0 {
                // bisect on the step length for the crossing
                let (mut lo, mut hi) = (0.0, h);
                while hi - lo > 1e-8 * (t + hi).abs().max(f64::MIN_POSITIVE) {
                    let mid = 0.5 * (lo + hi);
                    if dp_step(&f, t, y, mid).0 >= 1.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok((t + hi, 1.0, true));
            }
            t = if h == t1 - t { t1 } else { t + h };
            y = y_new;
            let grow = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
        } else {
            let shrink = if y_new.is_finite() {
                (0.9 * ratio.powf(-0.25)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= shrink;
            if h <= 1e-15 * t.abs().max(span) {
                return Err(DolError::numeric(format!(
                    "ADM step size underflow at t = {t} h, alpha = {y}, step {h}"
                )));
            }
        }
    }
    Ok((t1, y, false))
}

/// Integrates the damage ODE from `alpha(0) = 0` to `horizon` or failure.
pub fn adm_integrate(
    piece: &ADMPieceParams,
    profile: &LoadProfile,
    horizon: f64,
) -> Result<AdmOutcome> {
    adm_integrate_with(piece, profile, horizon, AdmTolerance::default())
}

pub fn adm_integrate_with(
    piece: &ADMPieceParams,
    profile: &LoadProfile,
    horizon: f64,
    tol: AdmTolerance,
) -> Result<AdmOutcome> {
    piece.validate()?;
    if !(horizon > 0.0) || horizon > profile.horizon() {
        return Err(DolError::domain(format!(
            "horizon {horizon} must lie in (0, {}]",
            profile.horizon()
        )));
    }
    let threshold = piece.threshold();
    let mut alpha = 0.0;
    if profile.max_load() <= threshold {
        return Ok(AdmOutcome {
            failure_time: None,
            final_alpha: 0.0,
        });
    }
    for seg in profile.segments() {
        if seg.t_start >= horizon {
            break;
        }
        let end = seg.t_end.min(horizon);
        // sub-intervals on which the load is above the threshold and smooth
        let pieces: Vec<(f64, f64)> = match seg.kind {
            SegmentKind::Constant => {
                if seg.level > threshold {
                    vec![(seg.t_start, end)]
                } else {
                    vec![]
                }
            }
            SegmentKind::Ramp => {
                let (l0, l1) = (seg.level, seg.load_at(end));
                if l0 <= threshold && l1 <= threshold {
                    vec![]
                } else if l0 > threshold && l1 > threshold {
                    vec![(seg.t_start, end)]
                } else {
                    let tc = seg.t_start + (threshold - seg.level) / seg.slope;
                    if l0 < l1 {
                        vec![(tc, end)]
                    } else {
                        vec![(seg.t_start, tc)]
                    }
                }
            }
        };
        for (s0, s1) in pieces {
            if s1 <= s0 {
                continue;
            }
            let f = |t: f64, y: f64| piece.rate(seg.load_at(t.clamp(seg.t_start, seg.t_end)), y);
            let (t_end, y_end, failed) = integrate_piece(f, s0, s1, alpha, tol)?;
            if failed {
                return Ok(AdmOutcome {
                    failure_time: Some(t_end),
                    final_alpha: 1.0,
                });
            }
            alpha = y_end;
        }
    }
    Ok(AdmOutcome {
        failure_time: None,
        final_alpha: alpha,
    })
}

/// Damage at each of the sorted `times`, 1 from the failure time on. Each
/// point is integrated from `t = 0`, so the values are independent solves.
pub fn adm_trajectory(
    piece: &ADMPieceParams,
    profile: &LoadProfile,
    times: &[f64],
) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(DolError::domain("times must be sorted ascending"));
    }
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(0.0);
            }
            Ok(adm_integrate(piece, profile, t)?.final_alpha)
        })
        .collect()
}

/// Monte Carlo failure probability within the profile horizon and its
/// binomial standard error. Pieces are drawn in order from `rng`, then
/// integrated in parallel.
pub fn adm_failure_prob<R: Rng + ?Sized>(
    pop: &ADMPopulationParams,
    profile: &LoadProfile,
    n_sim: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    pop.validate()?;
    if n_sim == 0 {
        return Err(DolError::config("n_sim must be >= 1"));
    }
    let pieces: Vec<ADMPieceParams> = (0..n_sim).map(|_| pop.sample_piece(rng)).collect();
    let horizon = profile.horizon();
    let outcomes: Vec<Result<AdmOutcome>> = pieces
        .par_iter()
        .map(|p| adm_integrate(p, profile, horizon))
        .collect();
    let mut failures = 0usize;
    for o in outcomes {
        failures += o?.failure_time.is_some() as usize;
    }
    let n = n_sim as f64;
    let p = failures as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}
