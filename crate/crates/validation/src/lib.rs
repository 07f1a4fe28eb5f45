//! Independent oracles for the acceptance suite: an exact-arithmetic 2F2
//! series and the Kolmogorov–Smirnov and batch-means statistics.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Plain 2F2 series in 2^-1024 fixed point with exact rational factors.
pub fn hyp2f2_oracle(a1: f64, a2: f64, b1: f64, b2: f64, z: f64) -> f64 {
    const BITS: usize = 1024;
    let q = |v: f64| BigRational::from_f64(v).unwrap();
    let (a1, a2, b1, b2, z) = (q(a1), q(a2), q(b1), q(b2), q(z));
    let one_fixed: BigInt = BigInt::one() << BITS;
    let mut term = one_fixed.clone();
    let mut sum = one_fixed.clone();
    let floor = BigInt::one() << 8;
    let mut n = 0u64;
    loop {
        let nq = BigRational::from_u64(n).unwrap();
        let ratio = (&a1 + &nq) * (&a2 + &nq) * &z
            / ((&b1 + &nq) * (&b2 + &nq) * (&nq + BigRational::one()));
        term = &term * ratio.numer() / ratio.denom();
        sum += &term;
        n += 1;
        if term.is_zero() || (term.abs() < floor && BigRational::from_u64(n).unwrap() > z.abs()) {
            break;
        }
    }
    BigRational::new(sum, one_fixed).to_f64().unwrap()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(x: &mut [f64], y: &mut [f64]) -> f64 {
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic KS critical coefficient at level 0.01.
pub const KS_C_001: f64 = 1.628;

/// Asymptotic KS critical coefficient at level 0.05.
pub const KS_C_005: f64 = 1.358;

/// One-sample KS distance between failure times (censored pieces omitted but
/// counted in `n`) and a model CDF, over `[0, truncation]`.
pub fn ks_censored(
    sorted_failures: &[f64],
    cdf_at_failures: &[f64],
    n: usize,
    cdf_at_truncation: f64,
) -> f64 {
    let n = n as f64;
    let mut d = 0.0f64;
    for (i, f) in cdf_at_failures.iter().enumerate() {
        d = d
            .max((i as f64 / n - f).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    let last = sorted_failures.len() as f64 / n;
    d.max((last - cdf_at_truncation).abs())
}

/// Batch-means standard error of a statistic.
pub fn batch_se(samples: &[f64], batches: usize, stat: impl Fn(&[f64]) -> f64) -> f64 {
    let size = samples.len() / batches;
    let vals: Vec<f64> = samples.chunks(size).take(batches).map(&stat).collect();
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    (var / vals.len() as f64).sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}
