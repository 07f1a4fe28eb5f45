//! Forward simulation of damage paths, failure times and test datasets.
//!
//! Failure times are drawn by inverting the survival curve with `eta_t`
//! smoothed inside ramps ([`EtaMode::RampSmoothed`]), the same evaluation the
//! likelihood uses; the `_with_mode` variants take the mode explicitly.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{DolError, Result};
use crate::failure::FailureModel;
use crate::inference::{Dataset, FailureRecord};
use crate::profile::{ramp_profile, ramp_then_constant, LoadProfile};
use crate::shape::{DegradationParams, EtaMode, LoadGrid, ShapeEvaluator};
use crate::{HOURS_PER_YEAR, TEST_RAMP_RATE};

/// One group of identically loaded pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignArm {
    pub id: String,
    pub profile: LoadProfile,
    pub n_pieces: usize,
    /// hours
    pub truncation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    pub arms: Vec<DesignArm>,
}

/// Horizon of the ramp-to-failure arm; the load reaches about 38800 psi.
pub const RAMP_ARM_HORIZON: f64 = 0.1;

impl ExperimentDesign {
    /// The three-arm Hemlock design: 198 pieces held at 3000 psi for 4 years,
    /// 300 at 4500 psi for 1 year and 139 ramped to failure.
    pub fn hemlock() -> Self {
        let years4 = 4.0 * HOURS_PER_YEAR;
        let year1 = HOURS_PER_YEAR;
        Self {
            arms: vec![
                DesignArm {
                    id: "constant_3000".into(),
                    profile: ramp_then_constant(TEST_RAMP_RATE, 3000.0, years4).expect("valid"),
                    n_pieces: 198,
                    truncation: years4,
                },
                DesignArm {
                    id: "constant_4500".into(),
                    profile: ramp_then_constant(TEST_RAMP_RATE, 4500.0, year1).expect("valid"),
                    n_pieces: 300,
                    truncation: year1,
                },
                DesignArm {
                    id: "ramp".into(),
                    profile: ramp_profile(TEST_RAMP_RATE, RAMP_ARM_HORIZON).expect("valid"),
                    n_pieces: 139,
                    truncation: RAMP_ARM_HORIZON,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for arm in &self.arms {
            if !seen.insert(arm.id.as_str()) {
                return Err(DolError::config(format!("duplicate arm id '{}'", arm.id)));
            }
            if arm.n_pieces == 0 {
                return Err(DolError::config(format!("arm '{}' has no pieces", arm.id)));
            }
            if !(arm.truncation > 0.0) || arm.truncation > arm.profile.horizon() {
                return Err(DolError::config(format!(
                    "arm '{}': truncation must lie in (0, horizon]",
                    arm.id
                )));
            }
        }
        Ok(())
    }

    pub fn profiles(&self) -> impl Iterator<Item = &LoadProfile> {
        self.arms.iter().map(|a| &a.profile)
    }
}

/// Damage `Y_t` at sorted `times` along one path started at `Y_0 = 0`.
pub fn sample_path<R: Rng + ?Sized>(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.validate()?;
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(DolError::domain("times must be sorted ascending"));
    }
    let shape = ShapeEvaluator::new(grid, profile)?;
    let etas = shape.eta_curve(params, times)?;
    let mut out = Vec::with_capacity(times.len());
    let (mut y, mut prev_eta) = (0.0, 0.0);
    for eta in etas {
        y += gamma_increment(eta - prev_eta, params.xi, rng)?;
        prev_eta = eta.max(prev_eta);
        out.push(y);
    }
    Ok(out)
}

/// One `Gamma(shape, scale)` draw; exactly 0 for `shape <= 0`.
pub fn gamma_increment<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0) {
        return Ok(0.0);
    }
    let dist = Gamma::new(shape, scale)
        .map_err(|e| DolError::domain(format!("gamma(shape {shape}, scale {scale}): {e}")))?;
    Ok(dist.sample(rng))
}

impl FailureModel {
    /// Draws a failure time by inverting the survival curve; returns
    /// `(truncation, true)` when the piece outlives the test.
    pub fn sample_failure_time<R: Rng + ?Sized>(
        &self,
        truncation: f64,
        rng: &mut R,
    ) -> Result<(f64, bool)> {
        if !(truncation > 0.0) || truncation > self.horizon() {
            return Err(DolError::domain(format!(
                "truncation {truncation} must lie in (0, {}]",
                self.horizon()
            )));
        }
        let u: f64 = Open01.sample(rng);
        if self.survival(truncation)? >= u {
            return Ok((truncation, true));
        }
        let (mut lo, mut hi) = (0.0, truncation);
        while hi - lo > 1e-8 * hi {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid)? > u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi < 1e-300 {
                break;
            }
        }
        Ok((0.5 * (lo + hi), false))
    }
}

pub fn sample_failure_time<R: Rng + ?Sized>(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    truncation: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    sample_failure_time_with_mode(
        params,
        grid,
        profile,
        truncation,
        EtaMode::RampSmoothed,
        rng,
    )
}

pub fn sample_failure_time_with_mode<R: Rng + ?Sized>(
    params: &DegradationParams,
    grid: &LoadGrid,
    profile: &LoadProfile,
    truncation: f64,
    mode: EtaMode,
    rng: &mut R,
) -> Result<(f64, bool)> {
    FailureModel::new(params, grid, profile)?
        .with_mode(mode)
        .sample_failure_time(truncation, rng)
}

/// Simulates every arm of `design` in order.
pub fn simulate_dataset<R: Rng + ?Sized>(
    params: &DegradationParams,
    grid: &LoadGrid,
    design: &ExperimentDesign,
    rng: &mut R,
) -> Result<Dataset> {
    simulate_dataset_with_mode(params, grid, design, EtaMode::RampSmoothed, rng)
}

pub fn simulate_dataset_with_mode<R: Rng + ?Sized>(
    params: &DegradationParams,
    grid: &LoadGrid,
    design: &ExperimentDesign,
    mode: EtaMode,
    rng: &mut R,
) -> Result<Dataset> {
    design.validate()?;
    let mut profiles = BTreeMap::new();
    let mut records = Vec::new();
    for arm in &design.arms {
        let model = FailureModel::new(params, grid, &arm.profile)?.with_mode(mode);
        for _ in 0..arm.n_pieces {
            let (time, censored) = model.sample_failure_time(arm.truncation, rng)?;
            records.push(FailureRecord {
                profile_id: arm.id.clone(),
                time,
                censored,
            });
        }
        profiles.insert(arm.id.clone(), arm.profile.clone());
    }
    Dataset::new(profiles, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::constant_profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const MEANS: DegradationParams = DegradationParams::HEMLOCK_MEANS;

    #[test]
    fn below_threshold_path_is_flat_and_censored() {
        let p = constant_profile(300.0, 100.0).unwrap();
        let g = LoadGrid::uniform(20.0, 300.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let path = sample_path(&MEANS, &g, &p, &[0.0, 10.0, 50.0, 100.0], &mut rng).unwrap();
        assert!(path.iter().all(|&y| y == 0.0));
        for _ in 0..20 {
            assert_eq!(
                sample_failure_time(&MEANS, &g, &p, 100.0, &mut rng).unwrap(),
                (100.0, true)
            );
        }
    }

    #[test]
    fn paths_are_nondecreasing() {
        let p = ramp_then_constant(TEST_RAMP_RATE, 4500.0, 1000.0).unwrap();
        let g = LoadGrid::uniform(20.0, p.max_load()).unwrap();
        let times: Vec<f64> = (0..200).map(|k| 5.0 * k as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let path = sample_path(&MEANS, &g, &p, &times, &mut rng).unwrap();
            assert_eq!(path[0], 0.0);
            assert!(path.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn hemlock_design_dataset() {
        let design = ExperimentDesign::hemlock();
        let g = LoadGrid::covering(20.0, design.profiles()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = simulate_dataset(&MEANS, &g, &design, &mut rng).unwrap();
        assert_eq!(ds.len(), 637);
        assert!(ds.arm("ramp").all(|r| !r.censored));
        let censored_3000 = ds.arm("constant_3000").filter(|r| r.censored).count();
        // the 3000 psi CDF plateaus around 0.35 at four years
        assert!((100..160).contains(&censored_3000), "{censored_3000}");
        let again =
            simulate_dataset(&MEANS, &g, &design, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn empty_design_gives_empty_dataset() {
        let g = LoadGrid::uniform(20.0, 100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ds = simulate_dataset(&MEANS, &g, &ExperimentDesign::default(), &mut rng).unwrap();
        assert!(ds.is_empty());
    }
}
