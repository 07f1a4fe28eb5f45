//! Time-varying shape `eta_t` of the damage gamma process.
//!
//! The load range is cut into levels `tau_1 < ... < tau_m`. Level `i`
//! contributes `g(t~_i) * [(u tau_i - v)_+ - (u tau_{i-1} - v)_+]`, where
//! `t~_i` is the time the load has spent at or above `tau_i` and
//! `g(s) = s^a + b s^c`. A load between two levels counts as the lower one.

use serde::{Deserialize, Serialize};

use crate::error::{DolError, Result};
use crate::profile::{ExceedanceTable, LoadProfile, SegmentKind};

/// Model parameters `(a, b, c, u, v, xi)`.
///
/// `a, c` are the two power-law exponents of `g`, `b` mixes them, `u` (1/psi)
/// and `v` set the load scaling with threshold `v / u`, and `xi` is the
/// gamma-process scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub u: f64,
    pub v: f64,
    pub xi: f64,
}

impl DegradationParams {
    pub const NAMES: [&'static str; 6] = ["a", "b", "c", "u", "v", "xi"];

    /// Posterior means of the Hemlock fit.
    pub const HEMLOCK_MEANS: Self = Self {
        a: 0.019,
        b: 0.01026,
        c: 0.40,
        u: 0.00088,
        v: 0.359,
        xi: 0.21,
    };

    /// Posterior medians of the Hemlock fit.
    pub const HEMLOCK_MEDIANS: Self = Self {
        a: 0.019,
        b: 0.00729,
        c: 0.39,
        u: 0.00088,
        v: 0.388,
        xi: 0.21,
    };

    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.u, self.v, self.xi]
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self {
            a: x[0],
            b: x[1],
            c: x[2],
            u: x[3],
            v: x[4],
            xi: x[5],
        }
    }

    /// All components finite and strictly positive.
    pub fn in_support(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v > 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_support() {
            Ok(())
        } else {
            Err(DolError::domain(format!(
                "degradation parameters must be finite and > 0: {self:?}"
            )))
        }
    }

    /// Stress threshold `v / u` below which no degradation accrues.
    pub fn threshold(&self) -> f64 {
        self.v / self.u
    }

    /// Whether `eta_dot` decays under constant load (`a < 1` and `c < 1`).
    /// Reported, never enforced.
    pub fn has_decaying_rate(&self) -> bool {
        self.a < 1.0 && self.c < 1.0
    }

    #[inline]
    fn level_term(&self, level: f64) -> f64 {
        (self.u * level - self.v).max(0.0)
    }
}

/// Discretization levels of the load axis, psi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadGrid {
    levels: Vec<f64>,
    spacing: f64,
}

impl LoadGrid {
    /// Levels `spacing, 2 spacing, ..., ceil(max_load / spacing) spacing`.
    pub fn uniform(spacing: f64, max_load: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() || !(max_load >= 0.0) || !max_load.is_finite() {
            return Err(DolError::domain(
                "grid needs spacing > 0 and finite max_load >= 0",
            ));
        }
        let m = ((max_load / spacing).ceil() as usize).max(1);
        let levels = (1..=m).map(|i| spacing * i as f64).collect();
        Ok(Self { levels, spacing })
    }

    /// A uniform grid covering every profile in `profiles`.
    pub fn covering<'a>(
        spacing: f64,
        profiles: impl IntoIterator<Item = &'a LoadProfile>,
    ) -> Result<Self> {
        let max_load = profiles
            .into_iter()
            .map(|p| p.max_load())
            .fold(0.0, f64::max);
        Self::uniform(spacing, max_load)
    }

    /// Arbitrary strictly increasing positive levels.
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || !(levels[0] > 0.0) {
            return Err(DolError::domain(
                "grid levels must be non-empty and start above 0",
            ));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) || levels.iter().any(|l| !l.is_finite()) {
            return Err(DolError::domain(
                "grid levels must be finite and strictly increasing",
            ));
        }
        let spacing = levels[0];
        Ok(Self { levels, spacing })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Nominal spacing (the first level for non-uniform grids).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn top(&self) -> f64 {
        *self.levels.last().expect("non-empty grid")
    }

    pub fn check_covers(&self, profile: &LoadProfile) -> Result<()> {
        let max = profile.max_load();
        if max > self.top() * (1.0 + 1e-12) {
            return Err(DolError::config(format!(
                "load grid tops out at {} psi but the profile reaches {max} psi",
                self.top()
            )));
        }
        Ok(())
    }

    /// `(u tau_i - v)_+ - (u tau_{i-1} - v)_+` for every level, with `tau_0 = 0`.
    pub fn increments(&self, params: &DegradationParams) -> Vec<f64> {
        let mut prev = params.level_term(0.0);
        self.levels
            .iter()
            .map(|&l| {
                let cur = params.level_term(l);
                let d = cur - prev;
                prev = cur;
                d
            })
            .collect()
    }
}

/// How `eta_t` is evaluated inside ramp segments.
///
/// Pointwise evaluation rises in steep steps right after each level crossing
/// (`t~^a` with small `a`), concentrating failure probability into
/// sub-nanosecond windows. `RampSmoothed` replaces each ramp stretch between
/// crossings by the straight line through its end values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    #[default]
    Pointwise,
    RampSmoothed,
}

/// One level's exposure at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelExposure {
    pub level: usize,
    /// `t~_i`, hours
    pub duration: f64,
    /// load currently at or above this level, so `t~_i` is growing
    pub active: bool,
}

/// Parameter-free part of `eta_t`: the exceedance time of every level that
/// has been reached by time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposure {
    pub t: f64,
    pub terms: Vec<LevelExposure>,
    /// `t` is a segment boundary or a level-crossing instant
    pub discontinuous: bool,
}

/// `eta_dot` at a point; at a discontinuity `value` is the right limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaRate {
    pub value: f64,
    pub discontinuous: bool,
}

impl Exposure {
    pub fn eta(&self, params: &DegradationParams, increments: &[f64]) -> f64 {
        let mut eta = 0.0;
        for term in &self.terms {
            let d = increments[term.level];
            if d == 0.0 || term.duration <= 0.0 {
                continue;
            }
            let ln_s = term.duration.ln();
            eta += ((params.a * ln_s).exp() + params.b * (params.c * ln_s).exp()) * d;
        }
        eta
    }

    pub fn eta_dot(&self, params: &DegradationParams, increments: &[f64]) -> f64 {
        let mut rate = 0.0;
        for term in self.terms.iter().filter(|t| t.active) {
            let d = increments[term.level];
            if d == 0.0 {
                continue;
            }
            if term.duration <= 0.0 {
                rate += (rate_limit_at_zero(params.a, params.a)
                    + rate_limit_at_zero(params.b * params.c, params.c))
                    * d;
                continue;
            }
            let ln_s = term.duration.ln();
            let s_inv = 1.0 / term.duration;
            rate += (params.a * (params.a * ln_s).exp()
                + params.b * params.c * (params.c * ln_s).exp())
                * s_inv
                * d;
        }
        rate
    }

    /// `(eta, eta_dot)` in one pass.
    pub fn eta_and_rate(&self, params: &DegradationParams, increments: &[f64]) -> (f64, f64) {
        (
            self.eta(params, increments),
            self.eta_dot(params, increments),
        )
    }
}

/// Right limit of `coef * s^(exponent - 1)` as `s -> 0+`.
fn rate_limit_at_zero(coef: f64, exponent: f64) -> f64 {
    if exponent < 1.0 {
        f64::INFINITY
    } else if exponent == 1.0 {
        coef
    } else {
        0.0
    }
}

/// Shape evaluation for one `(grid, profile)` pair with cached exceedance intervals.
#[derive(Debug, Clone)]
pub struct ShapeEvaluator {
    grid: LoadGrid,
    profile: LoadProfile,
    table: ExceedanceTable,
    breakpoints: Vec<f64>,
    ramp_intervals: Vec<(f64, f64)>,
}

impl ShapeEvaluator {
    pub fn new(grid: &LoadGrid, profile: &LoadProfile) -> Result<Self> {
        grid.check_covers(profile)?;
        // levels above the profile maximum never contribute
        let top = grid.levels().partition_point(|&l| l <= profile.max_load());
        let table = ExceedanceTable::new(profile, &grid.levels()[..top]);
        let breakpoints = profile.breakpoints();
        let ramp_intervals = ramp_intervals(profile, grid);
        Ok(Self {
            grid: grid.clone(),
            profile: profile.clone(),
            table,
            breakpoints,
            ramp_intervals,
        })
    }

    pub fn profile(&self) -> &LoadProfile {
        &self.profile
    }

    pub fn grid(&self) -> &LoadGrid {
        &self.grid
    }

    pub fn exposure(&self, t: f64) -> Result<Exposure> {
        let load = self.profile.load_at(t)?;
        let levels = self.table.levels();
        let mut terms = Vec::new();
        let mut discontinuous = false;
        for (i, &level) in levels.iter().enumerate() {
            let duration = self.table.exceedance(i, t);
            let active = level <= load;
            // exceedance time and activity only shrink with level
            if duration == 0.0 && !active {
                break;
            }
            if duration > 0.0 || active {
                terms.push(LevelExposure {
                    level: i,
                    duration,
                    active,
                });
            }
            if active && duration == 0.0 {
                discontinuous = true;
            }
        }
        if t > 0.0
            && t < self.profile.horizon()
            && self
                .breakpoints
                .binary_search_by(|b| b.total_cmp(&t))
                .is_ok()
        {
            discontinuous = true;
        }
        if !discontinuous && levels.binary_search_by(|l| l.total_cmp(&load)).is_ok() {
            discontinuous = true;
        }
        Ok(Exposure {
            t,
            terms,
            discontinuous,
        })
    }

    pub fn eta(&self, params: &DegradationParams, t: f64) -> Result<f64> {
        let inc = self.grid.increments(params);
        Ok(self.exposure(t)?.eta(params, &inc))
    }

    pub fn eta_dot(&self, params: &DegradationParams, t: f64) -> Result<EtaRate> {
        let inc = self.grid.increments(params);
        let e = self.exposure(t)?;
        Ok(EtaRate {
            value: e.eta_dot(params, &inc),
            discontinuous: e.discontinuous,
        })
    }

    pub fn eta_curve(&self, params: &DegradationParams, times: &[f64]) -> Result<Vec<f64>> {
        let inc = self.grid.increments(params);
        times
            .iter()
            .map(|&t| Ok(self.exposure(t)?.eta(params, &inc)))
            .collect()
    }

    /// Ramp stretch `[t0, t1)` between consecutive level crossings (or ramp
    /// ends) containing `t`.
    pub fn ramp_interval(&self, t: f64) -> Option<(f64, f64)> {
        let k = self.ramp_intervals.partition_point(|iv| iv.0 <= t);
        if k == 0 {
            return None;
        }
        let (t0, t1) = self.ramp_intervals[k - 1];
        (t < t1).then_some((t0, t1))
    }

    /// `eta` with straight-line interpolation between consecutive level
    /// crossings inside ramp segments; exact elsewhere and at the crossings.
    pub fn smooth_eta(&self, params: &DegradationParams, times: &[f64]) -> Result<Vec<f64>> {
        let inc = self.grid.increments(params);
        times
            .iter()
            .map(|&t| {
                Ok(self
                    .eta_and_rate_with(params, &inc, t, EtaMode::RampSmoothed)?
                    .0)
            })
            .collect()
    }

    /// `(eta, eta_dot)` under `mode`. In a smoothed ramp stretch the rate is
    /// the slope of the interpolating line; elsewhere it is the pointwise
    /// right limit.
    pub fn eta_and_rate_with(
        &self,
        params: &DegradationParams,
        increments: &[f64],
        t: f64,
        mode: EtaMode,
    ) -> Result<(f64, f64)> {
        if mode == EtaMode::RampSmoothed {
            if let Some((t0, t1)) = self.ramp_interval(t) {
                let e0 = self.exposure(t0)?.eta(params, increments);
                let e1 = self.exposure(t1)?.eta(params, increments);
                let slope = (e1 - e0) / (t1 - t0);
                return Ok((e0 + slope * (t - t0), slope));
            }
        }
        let e = self.exposure(t)?;
        Ok(e.eta_and_rate(params, increments))
    }

    pub fn eta_with(
        &self,
        params: &DegradationParams,
        increments: &[f64],
        t: f64,
        mode: EtaMode,
    ) -> Result<f64> {
        if mode == EtaMode::RampSmoothed && self.ramp_interval(t).is_some() {
            return Ok(self.eta_and_rate_with(params, increments, t, mode)?.0);
        }
        Ok(self.exposure(t)?.eta(params, increments))
    }
}

/// Consecutive knot pairs of every ramp segment: the segment ends plus each
/// instant the load passes a grid level.
fn ramp_intervals(profile: &LoadProfile, grid: &LoadGrid) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for seg in profile.segments() {
        if seg.kind != SegmentKind::Ramp || seg.slope == 0.0 {
            continue;
        }
        let mut knots = vec![seg.t_start, seg.t_end];
        let (lo, hi) = (seg.level.min(seg.end_load()), seg.level.max(seg.end_load()));
        for &l in grid.levels() {
            if l > lo && l < hi {
                let tk = seg.t_start + (l - seg.level) / seg.slope;
                if tk > seg.t_start && tk < seg.t_end {
                    knots.push(tk);
                }
            }
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        out.extend(knots.windows(2).map(|w| (w[0], w[1])));
    }
    out
}

fn exposure_direct(grid: &LoadGrid, profile: &LoadProfile, t: f64) -> Result<Exposure> {
    grid.check_covers(profile)?;
    let load = profile.load_at(t)?;
    let mut terms = Vec::new();
    let mut discontinuous = false;
    for (i, &level) in grid.levels().iter().enumerate() {
        if level > profile.max_load() {
            break;
        }
        let duration = profile.exceedance_time(level, t)?;
        let active = level <= load;
        if duration > 0.0 || active {
            terms.push(LevelExposure {
                level: i,
                duration,
                active,
            });
        }
        discontinuous |= active && duration == 0.0;
    }
    let interior_break =
        t > 0.0 && t < profile.horizon() && profile.segments().iter().any(|s| s.t_start == t);
    Ok(Exposure {
        t,
        terms,
        discontinuous: discontinuous || interior_break,
    })
}

/// `eta_t` for one profile and time.
pub fn eta(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    t: f64,
) -> Result<f64> {
    params.validate()?;
    let inc = grid.increments(params);
    Ok(exposure_direct(grid, profile, t)?.eta(params, &inc))
}

/// `d eta_t / dt`; the right limit when `t` is a crossing or breakpoint.
pub fn eta_dot(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    t: f64,
) -> Result<EtaRate> {
    params.validate()?;
    let inc = grid.increments(params);
    let e = exposure_direct(grid, profile, t)?;
    Ok(EtaRate {
        value: e.eta_dot(params, &inc),
        discontinuous: e.discontinuous,
    })
}

/// Smoothed `eta` at sorted `times`; see [`ShapeEvaluator::smooth_eta`].
pub fn smooth_eta(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    times: &[f64],
) -> Result<Vec<f64>> {
    params.validate()?;
    ShapeEvaluator::new(grid, profile)?.smooth_eta(params, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{constant_profile, ramp_profile, ramp_then_constant};
    use crate::{HOURS_PER_YEAR, TEST_RAMP_RATE};

    const MEANS: DegradationParams = DegradationParams::HEMLOCK_MEANS;

    fn grid_for(p: &LoadProfile) -> LoadGrid {
        LoadGrid::uniform(20.0, p.max_load()).unwrap()
    }

    #[test]
    fn below_threshold_is_zero() {
        let p = constant_profile(400.0, 1e4).unwrap();
        let g = grid_for(&p);
        assert_eq!(eta(&MEANS, &g, &p, 5000.0).unwrap(), 0.0);
        assert_eq!(eta_dot(&MEANS, &g, &p, 5000.0).unwrap().value, 0.0);
    }

    #[test]
    fn constant_load_closed_form() {
        let p = constant_profile(3000.0, 2000.0).unwrap();
        let g = grid_for(&p);
        let t: f64 = 1000.0;
        let want = (t.powf(0.019) + 0.01026 * t.powf(0.40)) * (0.00088 * 3000.0 - 0.359);
        let got = eta(&MEANS, &g, &p, t).unwrap();
        assert!(((got - want) / want).abs() < 1e-12);
        assert!((got - 2.97).abs() < 0.01);
        assert_eq!(eta(&MEANS, &g, &p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rate_decreases_under_constant_load() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 3000.0, 4.0 * HOURS_PER_YEAR).unwrap();
        let g = grid_for(&p);
        let r: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&t| eta_dot(&MEANS, &g, &p, t).unwrap().value)
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2]);
    }

    #[test]
    fn rate_matches_finite_difference() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 4500.0, HOURS_PER_YEAR).unwrap();
        let g = grid_for(&p);
        for t in [3.0, 50.0, 2000.0] {
            let h = 1e-4 * t;
            let fd = (eta(&MEANS, &g, &p, t + h).unwrap() - eta(&MEANS, &g, &p, t - h).unwrap())
                / (2.0 * h);
            let rate = eta_dot(&MEANS, &g, &p, t).unwrap();
            assert!(!rate.discontinuous);
            assert!(((rate.value - fd) / fd).abs() < 1e-6);
        }
    }

    #[test]
    fn crossing_instant_is_flagged() {
        let p = ramp_profile(TEST_RAMP_RATE, 0.05).unwrap();
        let g = grid_for(&p);
        let t = 1000.0 / TEST_RAMP_RATE;
        let r = eta_dot(&MEANS, &g, &p, t).unwrap();
        assert!(r.discontinuous);
        assert!(r.value.is_infinite());
    }

    #[test]
    fn grid_must_cover_profile() {
        let p = constant_profile(3000.0, 10.0).unwrap();
        let g = LoadGrid::uniform(20.0, 2000.0).unwrap();
        assert!(matches!(eta(&MEANS, &g, &p, 1.0), Err(DolError::Config(_))));
    }

    #[test]
    fn evaluator_matches_direct() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 3000.0, 100.0).unwrap();
        let g = grid_for(&p);
        let ev = ShapeEvaluator::new(&g, &p).unwrap();
        for t in [0.001, 0.005, 1.0, 99.0] {
            let a = ev.eta(&MEANS, t).unwrap();
            let b = eta(&MEANS, &g, &p, t).unwrap();
            assert!((a - b).abs() <= 1e-13 * b.max(1.0));
        }
    }

    #[test]
    fn smoothing_interpolates_between_crossings() {
        let p = ramp_profile(TEST_RAMP_RATE, 0.02).unwrap();
        let g = grid_for(&p);
        let ev = ShapeEvaluator::new(&g, &p).unwrap();
        let t0 = 3000.0 / TEST_RAMP_RATE;
        let t1 = 3020.0 / TEST_RAMP_RATE;
        let mid = 0.5 * (t0 + t1);
        let s = ev.smooth_eta(&MEANS, &[t0, mid, t1]).unwrap();
        assert_eq!(s[0], ev.eta(&MEANS, t0).unwrap());
        assert_eq!(s[2], ev.eta(&MEANS, t1).unwrap());
        assert!((s[1] - 0.5 * (s[0] + s[2])).abs() <= 1e-12 * s[1]);

        let c = constant_profile(3000.0, 100.0).unwrap();
        let times = [1.0, 10.0, 50.0];
        let smooth = smooth_eta(&MEANS, &grid_for(&c), &c, &times).unwrap();
        for (t, s) in times.iter().zip(smooth) {
            assert_eq!(s, eta(&MEANS, &grid_for(&c), &c, *t).unwrap());
        }
    }

    #[test]
    fn grid_refinement_converges_on_ramp() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 4510.0, 100.0).unwrap();
        let t = 50.0;
        let at =
            |sp: f64| eta(&MEANS, &LoadGrid::uniform(sp, p.max_load()).unwrap(), &p, t).unwrap();
        let (e40, e20, e10, e5) = (at(40.0), at(20.0), at(10.0), at(5.0));
        let (d1, d2, d3) = ((e40 - e20).abs(), (e20 - e10).abs(), (e10 - e5).abs());
        assert!(d2 < d1 && d3 < d2, "{d1} {d2} {d3}");
    }
}
