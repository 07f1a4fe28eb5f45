//! Piecewise load histories `tau(t)` (psi over hours).
//!
//! A profile is a contiguous list of constant or linear segments starting at
//! `t = 0`. Besides point evaluation it answers exceedance queries: the total
//! time up to `t` during which the load was at or above a level.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{DolError, Result};
use crate::HOURS_PER_YEAR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Constant,
    Ramp,
}

/// One piece of a load history. `level` is the load at `t_start`; the load at
/// `t` inside the segment is `level + slope * (t - t_start)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub kind: SegmentKind,
    pub level: f64,
    pub slope: f64,
}

impl LoadSegment {
    pub fn constant(t_start: f64, t_end: f64, level: f64) -> Self {
        Self {
            t_start,
            t_end,
            kind: SegmentKind::Constant,
            level,
            slope: 0.0,
        }
    }

    pub fn ramp(t_start: f64, t_end: f64, level: f64, slope: f64) -> Self {
        Self {
            t_start,
            t_end,
            kind: SegmentKind::Ramp,
            level,
            slope,
        }
    }

    #[inline]
    pub fn load_at(&self, t: f64) -> f64 {
        match self.kind {
            SegmentKind::Constant => self.level,
            SegmentKind::Ramp => self.level + self.slope * (t - self.t_start),
        }
    }

    pub fn end_load(&self) -> f64 {
        self.load_at(self.t_end)
    }

    fn max_load(&self) -> f64 {
        self.level.max(self.end_load())
    }

    fn min_load(&self) -> f64 {
        self.level.min(self.end_load())
    }

    /// Sub-interval of `[t_start, t_end]` on which the load is `>= level`.
    fn interval_at_or_above(&self, level: f64) -> Option<(f64, f64)> {
        let slope = match self.kind {
            SegmentKind::Constant => 0.0,
            SegmentKind::Ramp => self.slope,
        };
        if slope == 0.0 {
            return (self.level >= level).then_some((self.t_start, self.t_end));
        }
        if self.max_load() < level {
            return None;
        }
        if self.min_load() >= level {
            return Some((self.t_start, self.t_end));
        }
        let cross = (self.t_start + (level - self.level) / slope).clamp(self.t_start, self.t_end);
        if slope > 0.0 {
            Some((cross, self.t_end))
        } else {
            Some((self.t_start, cross))
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.t_start, self.t_end, self.level, self.slope]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(DolError::domain("segment fields must be finite"));
        }
        if !(self.t_start < self.t_end) {
            return Err(DolError::domain(format!(
                "segment requires t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.kind == SegmentKind::Constant && self.slope != 0.0 {
            return Err(DolError::domain("constant segment must have slope 0"));
        }
        if self.min_load() < 0.0 {
            return Err(DolError::domain("segment load must be nonnegative"));
        }
        Ok(())
    }
}

/// A validated, immutable load history on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    segments: Vec<LoadSegment>,
    horizon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    segments: Vec<LoadSegment>,
    horizon: f64,
}

impl Serialize for LoadProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawProfile {
            segments: self.segments.clone(),
            horizon: self.horizon,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LoadProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawProfile::deserialize(d)?;
        let profile = LoadProfile::new(raw.segments).map_err(serde::de::Error::custom)?;
        if profile.horizon != raw.horizon {
            return Err(serde::de::Error::custom(format!(
                "horizon {} does not match last segment end {}",
                raw.horizon, profile.horizon
            )));
        }
        Ok(profile)
    }
}

impl LoadProfile {
    /// Builds a profile from contiguous segments; the first must start at 0.
    pub fn new(segments: Vec<LoadSegment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| DolError::domain("profile needs at least one segment"))?;
        if first.t_start != 0.0 {
            return Err(DolError::domain("first segment must start at t = 0"));
        }
        for seg in &segments {
            seg.validate()?;
        }
        for pair in segments.windows(2) {
            if pair[0].t_end != pair[1].t_start {
                return Err(DolError::domain(format!(
                    "segments not contiguous at t = {} / {}",
                    pair[0].t_end, pair[1].t_start
                )));
            }
        }
        let horizon = segments.last().map(|s| s.t_end).unwrap_or(0.0);
        Ok(Self { segments, horizon })
    }

    pub fn segments(&self) -> &[LoadSegment] {
        &self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn max_load(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.max_load())
            .fold(0.0, f64::max)
    }

    pub fn min_load(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.min_load())
            .fold(f64::INFINITY, f64::min)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(DolError::domain(format!(
                "t = {t} outside profile range [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Index of the segment governing time `t` (segments are right-open except the last).
    fn segment_index(&self, t: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.t_end <= t);
        idx.min(self.segments.len() - 1)
    }

    /// Applied load at time `t`.
    pub fn load_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.segments[self.segment_index(t)].load_at(t))
    }

    /// Total time in `[0, t]` during which the load was at or above `level`.
    pub fn exceedance_time(&self, level: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if !(level >= 0.0) || !level.is_finite() {
            return Err(DolError::domain(format!("level must be >= 0, got {level}")));
        }
        let mut total = 0.0;
        for seg in &self.segments {
            if seg.t_start >= t {
                break;
            }
            if let Some((s, e)) = seg.interval_at_or_above(level) {
                let e = e.min(t);
                if e > s {
                    total += e - s;
                }
            }
        }
        Ok(total)
    }

    /// Times where a segment starts or ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.t_start).collect();
        out.push(self.horizon);
        out
    }

    /// Same shape with every load multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(DolError::domain("scale factor must be finite and >= 0"));
        }
        let segments = self
            .segments
            .iter()
            .map(|s| LoadSegment {
                level: s.level * factor,
                slope: s.slope * factor,
                ..*s
            })
            .collect();
        LoadProfile::new(segments)
    }

    /// Continues the profile at its final load until `new_horizon`.
    pub fn extended_to(&self, new_horizon: f64) -> Result<Self> {
        if new_horizon <= self.horizon {
            return Ok(self.clone());
        }
        let mut segments = self.segments.clone();
        let last = *segments.last().expect("non-empty");
        segments.push(LoadSegment::constant(
            self.horizon,
            new_horizon,
            last.end_load(),
        ));
        LoadProfile::new(segments)
    }

    /// Piecewise-linear polyline `(time, load)` at every breakpoint, with a
    /// duplicated time where the load jumps.
    pub fn polyline(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2 * self.segments.len());
        for seg in &self.segments {
            out.push((seg.t_start, seg.level));
            out.push((seg.t_end, seg.end_load()));
        }
        out
    }
}

/// A single ramp `tau(t) = rate * t` on `[0, horizon]`.
pub fn ramp_profile(rate: f64, horizon: f64) -> Result<LoadProfile> {
    if !(rate > 0.0) || !(horizon > 0.0) || !rate.is_finite() || !horizon.is_finite() {
        return Err(DolError::domain("ramp requires rate > 0 and horizon > 0"));
    }
    LoadProfile::new(vec![LoadSegment::ramp(0.0, horizon, 0.0, rate)])
}

/// Ramp at `rate` up to `level`, then hold until `total` hours.
pub fn ramp_then_constant(rate: f64, level: f64, total: f64) -> Result<LoadProfile> {
    if !(rate > 0.0) || !(level > 0.0) || !rate.is_finite() || !level.is_finite() {
        return Err(DolError::domain(
            "ramp-then-constant requires rate > 0 and level > 0",
        ));
    }
    let t_hold = level / rate;
    if !(total > t_hold) || !total.is_finite() {
        return Err(DolError::domain(format!(
            "total time {total} h must exceed the ramp time {t_hold} h"
        )));
    }
    LoadProfile::new(vec![
        LoadSegment::ramp(0.0, t_hold, 0.0, rate),
        LoadSegment::constant(t_hold, total, level),
    ])
}

/// Load held at `level` from `t = 0` to `horizon`.
pub fn constant_profile(level: f64, horizon: f64) -> Result<LoadProfile> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(DolError::domain("constant profile requires horizon > 0"));
    }
    LoadProfile::new(vec![LoadSegment::constant(0.0, horizon, level)])
}

/// Per-level exceedance intervals of a profile, for repeated `t~_i(t)` queries.
///
/// For every level the intervals where `tau >= level` are stored merged, with
/// cumulative durations, so a query is a binary search.
#[derive(Debug, Clone)]
pub struct ExceedanceTable {
    levels: Vec<f64>,
    intervals: Vec<Vec<(f64, f64)>>,
    cumulative: Vec<Vec<f64>>,
}

impl ExceedanceTable {
    /// `levels` must be strictly increasing.
    pub fn new(profile: &LoadProfile, levels: &[f64]) -> Self {
        let mut intervals: Vec<Vec<(f64, f64)>> = vec![Vec::new(); levels.len()];
        for seg in profile.segments() {
            // only levels at or below the segment maximum can be exceeded
            let top = levels.partition_point(|&l| l <= seg.max_load());
            for (i, &level) in levels[..top].iter().enumerate() {
                if let Some((s, e)) = seg.interval_at_or_above(level) {
                    if e <= s {
                        continue;
                    }
                    let list = &mut intervals[i];
                    match list.last_mut() {
                        Some(last) if last.1 == s => last.1 = e,
                        _ => list.push((s, e)),
                    }
                }
            }
        }
        let cumulative = intervals
            .iter()
            .map(|list| {
                let mut acc = 0.0;
                list.iter()
                    .map(|&(s, e)| {
                        let before = acc;
                        acc += e - s;
                        before
                    })
                    .collect()
            })
            .collect();
        Self {
            levels: levels.to_vec(),
            intervals,
            cumulative,
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Exceedance time of level `i` up to `t`.
    pub fn exceedance(&self, i: usize, t: f64) -> f64 {
        let list = &self.intervals[i];
        let k = list.partition_point(|&(s, _)| s < t);
        if k == 0 {
            return 0.0;
        }
        let (s, e) = list[k - 1];
        self.cumulative[i][k - 1] + (e.min(t) - s)
    }

    /// True if `t` is an endpoint of some exceedance interval of level `i`.
    pub fn is_knot(&self, i: usize, t: f64) -> bool {
        self.intervals[i].iter().any(|&(s, e)| s == t || e == t)
    }

    /// Sorted times in `(0, horizon)` at which some level starts being exceeded.
    pub fn crossing_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .intervals
            .iter()
            .flat_map(|list| list.iter().map(|&(s, _)| s))
            .filter(|&s| s > 0.0)
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }
}

/// Settings of the stochastic residential load generator.
///
/// The load is the sum of a constant dead load, a sustained occupancy load
/// redrawn (exponential magnitude) at exponentially distributed change
/// intervals, and short spikes arriving as a Poisson process with exponential
/// magnitudes and fixed duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResidentialConfig {
    /// psi
    pub dead_load: f64,
    /// psi
    pub occupancy_mean: f64,
    /// years; non-finite (or `null` in JSON) means occupancy never changes
    #[serde(with = "infinite_as_null")]
    pub occupancy_change_interval_mean: f64,
    /// events per year
    pub spike_rate: f64,
    /// psi
    pub spike_magnitude_mean: f64,
    /// hours
    pub spike_duration: f64,
    /// years
    pub horizon: f64,
    pub seed: u64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Defaults give a heavier-than-typical dwelling: record peaks of about
/// 1680 psi near year 3 and 2100 psi near year 14, and a second pass above
/// 2000 psi after year 40.
impl Default for ResidentialConfig {
    fn default() -> Self {
        Self {
            dead_load: 1000.0,
            occupancy_mean: 250.0,
            occupancy_change_interval_mean: 10.0,
            spike_rate: 1.0,
            spike_magnitude_mean: 300.0,
            spike_duration: 336.0,
            horizon: 50.0,
            seed: 474,
        }
    }
}

impl ResidentialConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("dead_load", self.dead_load),
            ("occupancy_mean", self.occupancy_mean),
            ("spike_rate", self.spike_rate),
            ("spike_magnitude_mean", self.spike_magnitude_mean),
            ("spike_duration", self.spike_duration),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(DolError::domain(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.occupancy_change_interval_mean > 0.0) {
            return Err(DolError::domain(
                "occupancy_change_interval_mean must be > 0",
            ));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(DolError::domain("horizon must be finite and > 0"));
        }
        Ok(())
    }
}

/// Draws a piecewise-constant residential load history; deterministic in `config.seed`.
pub fn generate_residential(config: &ResidentialConfig) -> Result<LoadProfile> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let horizon = config.horizon * HOURS_PER_YEAR;

    let draw_magnitude = |rng: &mut ChaCha8Rng, mean: f64| -> f64 {
        if mean > 0.0 {
            Exp::new(1.0 / mean).expect("positive rate").sample(rng)
        } else {
            0.0
        }
    };

    // occupancy periods
    let mut occupancy: Vec<(f64, f64)> =
        vec![(0.0, draw_magnitude(&mut rng, config.occupancy_mean))];
    if config.occupancy_change_interval_mean.is_finite() {
        let gap = Exp::new(1.0 / (config.occupancy_change_interval_mean * HOURS_PER_YEAR))
            .expect("positive rate");
        let mut t = gap.sample(&mut rng);
        while t < horizon {
            occupancy.push((t, draw_magnitude(&mut rng, config.occupancy_mean)));
            t += gap.sample(&mut rng);
        }
    }

    // spikes: (start, end, magnitude)
    let mut spikes: Vec<(f64, f64, f64)> = Vec::new();
    if config.spike_rate > 0.0 && config.spike_duration > 0.0 {
        let gap = Exp::new(config.spike_rate / HOURS_PER_YEAR).expect("positive rate");
        let mut t = gap.sample(&mut rng);
        while t < horizon {
            let magnitude = draw_magnitude(&mut rng, config.spike_magnitude_mean);
            spikes.push((t, (t + config.spike_duration).min(horizon), magnitude));
            t += gap.sample(&mut rng);
        }
    }

    let mut cuts: Vec<f64> = occupancy.iter().map(|&(t, _)| t).collect();
    for &(s, e, _) in &spikes {
        cuts.push(s);
        cuts.push(e);
    }
    cuts.push(horizon);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();

    let mut segments: Vec<LoadSegment> = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if e <= s {
            continue;
        }
        let occ_idx = occupancy.partition_point(|&(t, _)| t <= s) - 1;
        let spike_load: f64 = spikes
            .iter()
            .filter(|&&(ss, se, _)| ss <= s && s < se)
            .map(|&(_, _, m)| m)
            .sum();
        let load = config.dead_load + occupancy[occ_idx].1 + spike_load;
        match segments.last_mut() {
            Some(last) if last.level == load => last.t_end = e,
            _ => segments.push(LoadSegment::constant(s, e, load)),
        }
    }
    LoadProfile::new(segments)
}
