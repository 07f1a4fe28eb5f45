use std::collections::BTreeMap;

use lumber_dol::failure::FailureModel;
use lumber_dol::inference::*;
use lumber_dol::profile::{constant_profile, ramp_profile, ramp_then_constant};
use lumber_dol::simulate::{simulate_dataset, ExperimentDesign};
use lumber_dol::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MEANS: DegradationParams = DegradationParams::HEMLOCK_MEANS;

fn small_design() -> (LoadGrid, Dataset) {
    let design = ExperimentDesign::hemlock();
    let grid = LoadGrid::covering(DEFAULT_GRID_SPACING, design.profiles()).unwrap();
    let mut small = design.clone();
    for arm in &mut small.arms {
        arm.n_pieces = 20;
    }
    let data = simulate_dataset(&MEANS, &grid, &small, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    (grid, data)
}

fn single(profile: &LoadProfile, time: f64, censored: bool) -> Dataset {
    let mut profiles = BTreeMap::new();
    profiles.insert("p".to_string(), profile.clone());
    Dataset::new(
        profiles,
        vec![FailureRecord {
            profile_id: "p".into(),
            time,
            censored,
        }],
    )
    .unwrap()
}

#[test]
fn log_likelihood_adds_over_disjoint_records() {
    let (grid, data) = small_design();
    let (left, right) = data.records.split_at(25);
    let part = |recs: &[FailureRecord]| Dataset::new(data.profiles.clone(), recs.to_vec()).unwrap();
    let whole = log_likelihood(&MEANS, &grid, &data).unwrap();
    let sum = log_likelihood(&MEANS, &grid, &part(left)).unwrap()
        + log_likelihood(&MEANS, &grid, &part(right)).unwrap();
    assert!((whole - sum).abs() < 1e-9 * whole.abs(), "{whole} vs {sum}");
}

#[test]
fn censored_record_contributes_log_survival() {
    let profile = ramp_then_constant(TEST_RAMP_RATE, 4500.0, HOURS_PER_YEAR).unwrap();
    let grid = LoadGrid::covering(DEFAULT_GRID_SPACING, [&profile]).unwrap();
    let model = FailureModel::new(&MEANS, &grid, &profile)
        .unwrap()
        .with_mode(EtaMode::RampSmoothed);
    for t in [1e-3, 10.0, HOURS_PER_YEAR] {
        let ll = log_likelihood(&MEANS, &grid, &single(&profile, t, true)).unwrap();
        assert!((ll - model.survival(t).unwrap().ln()).abs() < 1e-12);
    }
}

#[test]
fn failure_record_matches_numerical_density() {
    // constant load from t = 0: eta is smooth for t > 0
    let profile = constant_profile(4000.0, 1e4).unwrap();
    let grid = LoadGrid::covering(DEFAULT_GRID_SPACING, [&profile]).unwrap();
    let model = FailureModel::new(&MEANS, &grid, &profile).unwrap();
    for t in [0.5, 30.0, 2000.0] {
        let h = 1e-4 * t;
        let s = |x: f64| model.survival(x).unwrap();
        let f = (s(t - h) - s(t + h)) / (2.0 * h);
        let ll = log_likelihood(&MEANS, &grid, &single(&profile, t, false)).unwrap();
        assert!((ll - f.ln()).abs() < 1e-6, "t {t}: {ll} vs {}", f.ln());
    }
}

#[test]
fn prior_is_sum_of_normal_log_densities() {
    let prior = PriorSpec { mean: 0.5, sd: 3.0 };
    let direct: f64 = MEANS
        .to_array()
        .iter()
        .map(|x| {
            let z: f64 = (x - 0.5) / 3.0;
            (-(0.5 * z * z)).exp() / (3.0 * (2.0 * std::f64::consts::PI).sqrt())
        })
        .map(f64::ln)
        .sum();
    assert!((prior.log_density(&MEANS) - direct).abs() < 1e-12);

    let (grid, data) = small_design();
    let lp = log_posterior(&MEANS, &grid, &data, &prior).unwrap();
    let ll = log_likelihood(&MEANS, &grid, &data).unwrap();
    assert!((lp - ll - direct).abs() < 1e-9);
}

#[test]
fn prior_rejects_unordered_exponents() {
    let bad = DegradationParams {
        a: 0.5,
        c: 0.4,
        ..MEANS
    };
    assert_eq!(PriorSpec::default().log_density(&bad), f64::NEG_INFINITY);
    let (grid, data) = small_design();
    assert_eq!(
        log_posterior(&bad, &grid, &data, &PriorSpec::default()).unwrap(),
        f64::NEG_INFINITY
    );
}

#[test]
fn nelder_mead_improves_with_more_iterations() {
    let (grid, data) = small_design();
    let prepared = PreparedData::new(&grid, &data).unwrap();
    let prior = PriorSpec::default();
    let mut last = prepared.log_posterior(&DEFAULT_START, &prior);
    for iters in [10, 100, 1000] {
        let x = nelder_mead_prepared(&prepared, &prior, &DEFAULT_START, iters).unwrap();
        let lp = prepared.log_posterior(&x, &prior);
        assert!(lp >= last, "{iters} iterations: {lp} < {last}");
        last = lp;
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Standard error of the mean from `batches` batch means.
fn batch_se(x: &[f64], batches: usize) -> f64 {
    let means: Vec<f64> = x
        .chunks(x.len() / batches)
        .take(batches)
        .map(mean)
        .collect();
    (variance(&means) / batches as f64).sqrt()
}

/// Gamma(3, rate 2) target: mean 1.5, variance 0.75.
struct GammaToy;

impl LogTarget for GammaToy {
    fn dim(&self) -> usize {
        1
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        if x[0] <= 0.0 {
            return f64::NEG_INFINITY;
        }
        2.0 * x[0].ln() - 2.0 * x[0]
    }
}

fn toy_config(temp_max: f64) -> PTConfig {
    PTConfig {
        n_chains: 4,
        temp_max,
        burn_in: 2000,
        keep: 40000,
        seed: 17,
        ..PTConfig::desk()
    }
}

fn check_toy_moments(trace: &ChainTrace) {
    let x: Vec<f64> = trace.draws.iter().map(|d| d[0]).collect();
    let m = mean(&x);
    let se = batch_se(&x, 40);
    assert!((m - 1.5).abs() < 3.0 * se, "mean {m}, se {se}");
    let v = variance(&x);
    assert!((v - 0.75).abs() < 0.1, "variance {v}");
}

#[test]
fn tempering_recovers_conjugate_posterior() {
    check_toy_moments(&run_tempering(&GammaToy, &[1.0], &toy_config(20.0)).unwrap());
}

#[test]
fn tempering_with_unit_temperatures_leaves_target_invariant() {
    let trace = run_tempering(&GammaToy, &[1.0], &toy_config(1.0)).unwrap();
    assert!(trace.temperatures.iter().all(|&t| t == 1.0));
    assert!(trace.swap_rates.iter().all(|&r| r == 1.0));
    check_toy_moments(&trace);
}

fn quick_pt(seed: u64) -> PTConfig {
    PTConfig {
        n_chains: 3,
        burn_in: 200,
        keep: 300,
        init_iters: 200,
        seed,
        ..PTConfig::desk()
    }
}

#[test]
fn posterior_run_is_deterministic_and_in_support() {
    let (grid, data) = small_design();
    let prior = PriorSpec::default();
    let a = run_parallel_tempering(&grid, &data, &prior, &quick_pt(4), None).unwrap();
    let b = run_parallel_tempering(&grid, &data, &prior, &quick_pt(4), None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 300);
    assert!(a.draws.iter().all(|d| d.in_support() && d.a < d.c));
    assert!(a.log_post.iter().all(|lp| lp.is_finite()));
    let c = run_parallel_tempering(&grid, &data, &prior, &quick_pt(5), None).unwrap();
    assert_ne!(a.draws, c.draws);
}

#[test]
fn ramp_only_dataset_is_fit_without_error() {
    let profile = ramp_profile(TEST_RAMP_RATE, 0.1).unwrap();
    let grid = LoadGrid::covering(DEFAULT_GRID_SPACING, [&profile]).unwrap();
    let data = single(&profile, 0.012, false);
    let out =
        run_parallel_tempering(&grid, &data, &PriorSpec::default(), &quick_pt(1), None).unwrap();
    assert!(out.draws.iter().all(|d| d.in_support()));
}

#[test]
fn quantiles_of_uniform_grid() {
    let sorted: Vec<f64> = (0..=100).map(f64::from).collect();
    for p in [0.0, 0.025, 0.5, 0.975, 1.0] {
        assert!((quantile_sorted(&sorted, p) - 100.0 * p).abs() < 1e-12);
    }
    let s = summarize_column("x", &sorted).unwrap();
    assert_eq!(s.median, 50.0);
    assert_eq!(s.mean, 50.0);
}
