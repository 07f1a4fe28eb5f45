use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DolError, Result};

/// Unnormalized log density over strictly positive coordinates.
pub trait LogTarget: Sync {
    fn dim(&self) -> usize;
    /// `-inf` outside the support.
    fn log_density(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PTConfig {
    pub n_chains: usize,
    pub temp_min: f64,
    pub temp_max: f64,
    pub swap_stride: usize,
    pub burn_in: usize,
    pub keep: usize,
    /// Initial random-walk standard deviations on the log scale, one per
    /// parameter; empty means 0.05 for all.
    pub proposal_scales: Vec<f64>,
    /// Tune proposal scales during burn-in, then freeze them.
    pub adapt: bool,
    pub seed: u64,
    /// Nelder–Mead iterations used to find the starting point.
    pub init_iters: usize,
}

impl Default for PTConfig {
    fn default() -> Self {
        Self::desk()
    }
}

const ADAPT_WINDOW: usize = 50;
const ACCEPT_LOW: f64 = 0.2;
const ACCEPT_HIGH: f64 = 0.5;

impl PTConfig {
    /// 8 chains, 2000 burn-in, 5000 kept.
    pub fn desk() -> Self {
        Self {
            n_chains: 8,
            temp_min: 1.0,
            temp_max: 20.0,
            swap_stride: 5,
            burn_in: 2000,
            keep: 5000,
            proposal_scales: Vec::new(),
            adapt: true,
            seed: 1,
            init_iters: 2000,
        }
    }

    /// 120 chains, 5000 burn-in, 15000 kept.
    pub fn paper_scale() -> Self {
        Self {
            n_chains: 120,
            burn_in: 5000,
            keep: 15000,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains < 2 {
            return Err(DolError::config(
                "parallel tempering needs at least 2 chains",
            ));
        }
        if self.temp_min != 1.0 {
            return Err(DolError::config(
                "temp_min must be 1 so the first chain targets the posterior",
            ));
        }
        if !(self.temp_max >= self.temp_min) || !self.temp_max.is_finite() {
            return Err(DolError::config("temp_max must be finite and >= temp_min"));
        }
        if self.swap_stride == 0 {
            return Err(DolError::config("swap_stride must be >= 1"));
        }
        if self.keep == 0 {
            return Err(DolError::config("keep must be >= 1"));
        }
        if self
            .proposal_scales
            .iter()
            .any(|s| !(*s > 0.0) || !s.is_finite())
        {
            return Err(DolError::config("proposal scales must be finite and > 0"));
        }
        Ok(())
    }

    /// Geometric ladder from `temp_min` to `temp_max`.
    pub fn temperatures(&self) -> Vec<f64> {
        let n = self.n_chains;
        let ratio = self.temp_max / self.temp_min;
        (0..n)
            .map(|k| self.temp_min * ratio.powf(k as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Output of a tempering run: the temperature-1 chain after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub draws: Vec<Vec<f64>>,
    /// Untempered log target of each draw.
    pub log_target: Vec<f64>,
    /// Post-burn-in acceptance rate of each temperature slot.
    pub acceptance: Vec<f64>,
    /// Post-burn-in swap acceptance rate of each adjacent pair `(k, k+1)`.
    pub swap_rates: Vec<f64>,
    pub temperatures: Vec<f64>,
    /// Frozen proposal scales of each slot.
    pub scales: Vec<Vec<f64>>,
}

struct Chain {
    x: Vec<f64>,
    lp: f64,
    beta: f64,
    rng: ChaCha8Rng,
    scales: Vec<f64>,
    window_accepts: usize,
    accepts: usize,
    // log-coordinates seen during the covariance-learning part of burn-in
    history: Vec<Vec<f64>>,
    record: bool,
    draws: Vec<Vec<f64>>,
    log_target: Vec<f64>,
}

impl Chain {
    fn step<T: LogTarget>(&mut self, target: &T, iter: usize, burn_in: usize, adapt: bool) {
        let d = self.x.len();
        let mut proposal = Vec::with_capacity(d);
        let mut log_jacobian = 0.0;
        for (xi, s) in self.x.iter().zip(&self.scales) {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            let step = s * z;
            proposal.push(xi * step.exp());
            log_jacobian += step;
        }
        let lp_new = target.log_density(&proposal);
        let log_ratio = self.beta * (lp_new - self.lp) + log_jacobian;
        let u: f64 = self.rng.random();
        let accepted = lp_new > f64::NEG_INFINITY && (log_ratio >= 0.0 || u.ln() < log_ratio);
        if accepted {
            self.x = proposal;
            self.lp = lp_new;
        }
        if iter < burn_in {
            if adapt {
                self.adapt(iter, burn_in, accepted);
            }
        } else {
            self.accepts += accepted as usize;
            if self.record {
                self.draws.push(self.x.clone());
                self.log_target.push(self.lp);
            }
        }
    }

    // Windowed tuning: the common multiplier is nudged until window acceptance
    // sits in [0.2, 0.5]; halfway through burn-in the per-parameter shape is
    // reset from the spread of the chain's own log-coordinates.
    fn adapt(&mut self, iter: usize, burn_in: usize, accepted: bool) {
        self.window_accepts += accepted as usize;
        if iter >= burn_in / 4 && iter < burn_in / 2 {
            self.history.push(self.x.iter().map(|v| v.ln()).collect());
        }
        if iter + 1 == burn_in / 2 && self.history.len() >= 20 {
            let d = self.x.len();
            let n = self.history.len() as f64;
            let mut new_scales = Vec::with_capacity(d);
            for j in 0..d {
                let mean = self.history.iter().map(|h| h[j]).sum::<f64>() / n;
                let var = self
                    .history
                    .iter()
                    .map(|h| (h[j] - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0);
                let sd = var.sqrt() * 2.38 / (d as f64).sqrt();
                new_scales.push(if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    self.scales[j]
                });
            }
            self.scales = new_scales;
            self.history = Vec::new();
        }
        if (iter + 1).is_multiple_of(ADAPT_WINDOW) {
            let rate = self.window_accepts as f64 / ADAPT_WINDOW as f64;
            let factor = if rate < ACCEPT_LOW {
                0.7
            } else if rate > ACCEPT_HIGH {
                1.4
            } else {
                1.0
            };
            for s in &mut self.scales {
                *s *= factor;
            }
            self.window_accepts = 0;
        }
    }
}

/// Parallel tempering with log-scale Gaussian random-walk proposals. Chains
/// advance `swap_stride` steps independently, then adjacent pairs (even and
/// odd pairings alternating) propose swaps. Each chain has its own RNG
/// stream, so the result does not depend on the thread count.
pub fn run_tempering<T: LogTarget>(
    target: &T,
    init: &[f64],
    config: &PTConfig,
) -> Result<ChainTrace> {
    config.validate()?;
    let d = target.dim();
    if init.len() != d {
        return Err(DolError::config(format!(
            "initial point has {} coordinates, target has {d}",
            init.len()
        )));
    }
    if !config.proposal_scales.is_empty() && config.proposal_scales.len() != d {
        return Err(DolError::config(format!("expected {d} proposal scales")));
    }
    let lp0 = target.log_density(init);
    if !lp0.is_finite() {
        return Err(DolError::numeric(
            "log target is not finite at the initial point",
        ));
    }
    let scales0 = if config.proposal_scales.is_empty() {
        vec![0.05; d]
    } else {
        config.proposal_scales.clone()
    };
    let temps = config.temperatures();
    let mut chains: Vec<Chain> = temps
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64 + 1);
            let (mut x, mut lp) = (init.to_vec(), lp0);
            if k > 0 {
                let jittered: Vec<f64> = init
                    .iter()
                    .map(|v| {
                        v * {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            (0.01 * z).exp()
                        }
                    })
                    .collect();
                let lpj = target.log_density(&jittered);
                if lpj.is_finite() {
                    x = jittered;
                    lp = lpj;
                }
            }
            Chain {
                x,
                lp,
                beta: 1.0 / t,
                rng,
                scales: scales0.clone(),
                window_accepts: 0,
                accepts: 0,
                history: Vec::new(),
                record: k == 0,
                draws: Vec::with_capacity(if k == 0 { config.keep } else { 0 }),
                log_target: Vec::new(),
            }
        })
        .collect();
    let mut swap_rng = ChaCha8Rng::seed_from_u64(config.seed);
    swap_rng.set_stream(0);
    let n = chains.len();
    let mut swap_tries = vec![0usize; n - 1];
    let mut swap_accepts = vec![0usize; n - 1];
    let total = config.burn_in + config.keep;
    let mut iter = 0;
    let mut round = 0;
    while iter < total {
        let steps = config.swap_stride.min(total - iter);
        chains.par_iter_mut().for_each(|c| {
            for s in 0..steps {
                c.step(target, iter + s, config.burn_in, config.adapt);
            }
        });
        iter += steps;
        let counting = iter > config.burn_in;
        let mut k = round % 2;
        while k + 1 < n {
            let (lo, hi) = chains.split_at_mut(k + 1);
            let (a, b) = (&mut lo[k], &mut hi[0]);
            let log_ratio = (a.beta - b.beta) * (b.lp - a.lp);
            let u: f64 = swap_rng.random();
            let accept = log_ratio >= 0.0 || u.ln() < log_ratio;
            if accept {
                std::mem::swap(&mut a.x, &mut b.x);
                std::mem::swap(&mut a.lp, &mut b.lp);
            }
            if counting {
                swap_tries[k] += 1;
                swap_accepts[k] += accept as usize;
            }
            k += 2;
        }
        round += 1;
    }
    let acceptance = chains
        .iter()
        .map(|c| c.accepts as f64 / config.keep as f64)
        .collect();
    let swap_rates = swap_tries
        .iter()
        .zip(&swap_accepts)
        .map(|(&t, &a)| {
            if t == 0 {
                f64::NAN
            } else {
                a as f64 / t as f64
            }
        })
        .collect();
    let scales = chains.iter().map(|c| c.scales.clone()).collect();
    let first = chains.swap_remove(0);
    Ok(ChainTrace {
        draws: first.draws,
        log_target: first.log_target,
        acceptance,
        swap_rates,
        temperatures: temps,
        scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gamma(shape, rate) density: the conjugate posterior of a Poisson rate.
    struct GammaTarget {
        shape: f64,
        rate: f64,
    }

    impl LogTarget for GammaTarget {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            if x[0] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            (self.shape - 1.0) * x[0].ln() - self.rate * x[0]
        }
    }

    fn small_config(seed: u64) -> PTConfig {
        PTConfig {
            n_chains: 4,
            burn_in: 1000,
            keep: 20000,
            seed,
            ..PTConfig::desk()
        }
    }

    #[test]
    fn ladder_is_geometric() {
        let t = PTConfig::desk().temperatures();
        assert_eq!(t.len(), 8);
        assert_eq!(t[0], 1.0);
        assert!((t[7] - 20.0).abs() < 1e-12);
        let r = t[1] / t[0];
        assert!(t.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
    }

    #[test]
    fn equal_temperatures_always_swap() {
        let target = GammaTarget {
            shape: 3.0,
            rate: 2.0,
        };
        let cfg = PTConfig {
            n_chains: 2,
            temp_max: 1.0,
            ..small_config(5)
        };
        let out = run_tempering(&target, &[1.0], &cfg).unwrap();
        assert!(out.swap_rates.iter().all(|&r| r == 1.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let target = GammaTarget {
            shape: 3.0,
            rate: 2.0,
        };
        let a = run_tempering(&target, &[1.0], &small_config(9)).unwrap();
        let b = run_tempering(&target, &[1.0], &small_config(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn acceptance_lands_in_band() {
        let target = GammaTarget {
            shape: 3.0,
            rate: 2.0,
        };
        let out = run_tempering(&target, &[1.0], &small_config(11)).unwrap();
        assert!(
            (0.15..0.6).contains(&out.acceptance[0]),
            "{:?}",
            out.acceptance
        );
    }

    #[test]
    fn bad_configs_rejected() {
        let target = GammaTarget {
            shape: 3.0,
            rate: 2.0,
        };
        for cfg in [
            PTConfig {
                n_chains: 1,
                ..PTConfig::desk()
            },
            PTConfig {
                swap_stride: 0,
                ..PTConfig::desk()
            },
            PTConfig {
                temp_min: 2.0,
                ..PTConfig::desk()
            },
        ] {
            assert!(run_tempering(&target, &[1.0], &cfg).is_err());
        }
        assert!(run_tempering(&target, &[-1.0], &small_config(1)).is_err());
    }
}
