//! The generalized hypergeometric series 2F2.
//!
//! The failure-time density only needs `2F2(eta, eta; eta+1, eta+1; -x)` with
//! `eta > 0`, `x = 1/xi > 0`. Its direct series alternates with terms up to
//! roughly `e^x`, so for that family we sum the rearrangement
//!
//! ```text
//! 2F2(a, a; a+1, a+1; -x) = a^2 e^{-x} sum_k x^k / (a (a+1) ... (a+k)) * sum_{j<=k} 1/(a+j)
//! ```
//!
//! which has only positive terms. It follows from writing the function as
//! `a^2 int_0^1 s^{a-1} (-ln s) e^{-xs} ds` and expanding `e^{x(1-s)}`.
//! Other arguments use the direct series with compensated summation.

use super::{check_finite, AccuracyReport};
use crate::error::{DolError, Result};

/// Rescale accumulated sums above this magnitude.
const RESCALE_AT: f64 = 1e280;

#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.carry *= f;
    }
}

fn is_nonpositive_integer(b: f64) -> bool {
    b <= 0.0 && b.fract() == 0.0
}

/// `2F2(a1, a2; b1, b2; z)` with default accuracy.
pub fn hyp2f2(a1: f64, a2: f64, b1: f64, b2: f64, z: f64) -> Result<f64> {
    hyp2f2_with(a1, a2, b1, b2, z, &AccuracyReport::default())
}

pub fn hyp2f2_with(
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
    z: f64,
    acc: &AccuracyReport,
) -> Result<f64> {
    for (name, v) in [("a1", a1), ("a2", a2), ("b1", b1), ("b2", b2), ("z", z)] {
        check_finite(name, v)?;
    }
    if is_nonpositive_integer(b1) || is_nonpositive_integer(b2) {
        return Err(DolError::domain(format!(
            "2F2 lower parameters must not be non-positive integers (b1 = {b1}, b2 = {b2})"
        )));
    }
    if in_gamma_family(a1, a2, b1, b2, z) {
        return Ok(ln_family(a1, -z, acc)?.exp());
    }
    direct_series(a1, a2, b1, b2, z, acc)
}

fn in_gamma_family(a1: f64, a2: f64, b1: f64, b2: f64, z: f64) -> bool {
    a1 > 0.0 && a1 == a2 && b1 == b2 && b1 == a1 + 1.0 && z < 0.0
}

/// ln 2F2(eta, eta; eta+1, eta+1; -x) for eta > 0, x >= 0.
pub fn ln_hyp2f2_family(eta: f64, x: f64) -> Result<f64> {
    check_finite("eta", eta)?;
    check_finite("x", x)?;
    if eta <= 0.0 || x < 0.0 {
        return Err(DolError::domain(format!(
            "2F2 family requires eta > 0 and x >= 0, got eta = {eta}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    ln_family(eta, x, &AccuracyReport::default())
}

fn ln_family(a: f64, x: f64, acc: &AccuracyReport) -> Result<f64> {
    // weight_k = x^k / (a (a+1) ... (a+k)),  harmonic_k = sum_{j<=k} 1/(a+j)
    let mut weight = 1.0 / a;
    let mut harmonic = 1.0 / a;
    let mut sum = Kahan::default();
    sum.add(weight * harmonic);
    let mut ln_scale = 0.0;
    let mut small_run = 0;
    for k in 1..=acc.max_terms {
        let denom = a + k as f64;
        weight *= x / denom;
        harmonic += 1.0 / denom;
        let term = weight * harmonic;
        sum.add(term);
        if sum.sum > RESCALE_AT {
            sum.scale(1.0 / RESCALE_AT);
            weight /= RESCALE_AT;
            ln_scale += RESCALE_AT.ln();
        }
        // terms grow until k ~ x - a, so only test past the peak
        if denom > x && (term <= acc.rel_tol * sum.sum || term <= acc.abs_tol) {
            small_run += 1;
            if small_run == 3 {
                return Ok(2.0 * a.ln() - x + ln_scale + sum.sum.ln());
            }
        } else {
            small_run = 0;
        }
    }
    Err(DolError::numeric(format!(
        "2F2({a}, {a}; {b}, {b}; {z}) did not converge in {n} terms",
        b = a + 1.0,
        z = -x,
        n = acc.max_terms
    )))
}

fn direct_series(a1: f64, a2: f64, b1: f64, b2: f64, z: f64, acc: &AccuracyReport) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = Kahan::default();
    sum.add(term);
    let mut small_run = 0;
    for n in 0..acc.max_terms {
        let nf = n as f64;
        term *= (a1 + nf) * (a2 + nf) / ((b1 + nf) * (b2 + nf)) * z / (nf + 1.0);
        if !term.is_finite() {
            break;
        }
        sum.add(term);
        if term.abs() <= acc.rel_tol * sum.sum.abs() || term.abs() <= acc.abs_tol {
            small_run += 1;
            if small_run == 3 {
                return Ok(sum.sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(DolError::numeric(format!(
        "2F2({a1}, {a2}; {b1}, {b2}; {z}) did not converge in {} terms",
        acc.max_terms
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::bigint::BigInt;
    use num::rational::BigRational;
    use num::{FromPrimitive, One, Signed, ToPrimitive, Zero};

    /// Fixed-point big-integer evaluation of the plain 2F2 series.
    /// Every factor is the exact rational value of the f64 argument; only the
    /// division into the 2^-1024 fixed point truncates.
    pub(crate) fn series_oracle(a1: f64, a2: f64, b1: f64, b2: f64, z: f64) -> f64 {
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
            if term.abs() < floor && BigRational::from_u64(n).unwrap() > z.abs() {
                break;
            }
            if term.is_zero() {
                break;
            }
        }
        BigRational::new(sum, one_fixed).to_f64().unwrap()
    }

    #[test]
    fn empty_tail_at_zero() {
        assert_eq!(hyp2f2(2.0, 2.0, 3.0, 3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn matches_oracle_on_examples() {
        let cases = [
            (1.0, -0.5),
            (0.5, -4.7619),
            (5.0, -1.0 / 0.21),
            (50.0, -20.0),
            (1e-3, -20.0),
        ];
        for (eta, z) in cases {
            let got = hyp2f2(eta, eta, eta + 1.0, eta + 1.0, z).unwrap();
            let want = series_oracle(eta, eta, eta + 1.0, eta + 1.0, z);
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "eta {eta} z {z}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn direct_series_matches_oracle_off_family() {
        for &(a1, a2, b1, b2, z) in &[
            (1.5, 0.3, 2.2, 0.7, 1.3),
            (-2.0, 1.0, 3.0, 4.0, 2.0),
            (0.5, 0.5, 1.5, 1.5, -1.2),
            (2.0, 3.0, 1.5, 2.5, -0.75),
        ] {
            let got = hyp2f2(a1, a2, b1, b2, z).unwrap();
            let want = series_oracle(a1, a2, b1, b2, z);
            assert!(((got - want) / want).abs() < 1e-13);
        }
    }

    #[test]
    fn ln_family_is_consistent() {
        let eta = 3.3;
        let x = 4.5;
        let direct = hyp2f2(eta, eta, eta + 1.0, eta + 1.0, -x).unwrap();
        assert!((ln_hyp2f2_family(eta, x).unwrap() - direct.ln()).abs() < 1e-14);
        // overflow-free for very small scale
        let ln = ln_hyp2f2_family(2.0, 2000.0).unwrap();
        assert!(ln.is_finite() && ln < 0.0);
    }

    #[test]
    fn rejects_pole_parameters() {
        assert!(hyp2f2(1.0, 1.0, -2.0, 1.0, 0.5).is_err());
        assert!(hyp2f2(1.0, 1.0, 1.0, 0.0, 0.5).is_err());
        assert!(hyp2f2(1.0, f64::NAN, 1.0, 1.0, 0.5).is_err());
    }
}
