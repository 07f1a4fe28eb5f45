use super::check_finite;
use crate::error::{DolError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// zeta(k) - 1 for k = 2, 3, ...
const ZETA_MINUS_ONE: [f64; 39] = [
    0.644_934_066_848_226_4,
    0.202_056_903_159_594_3,
    0.082_323_233_711_138_19,
    0.036_927_755_143_369_93,
    0.017_343_061_984_449_14,
    0.008_349_277_381_922_827,
    0.004_077_356_197_944_339,
    0.002_008_392_826_082_214,
    0.000_994_575_127_818_085_3,
    0.000_494_188_604_119_464_6,
    0.000_246_086_553_308_048_3,
    0.000_122_713_347_578_489_1,
    6.124_813_505_870_483e-5,
    3.058_823_630_702_049e-5,
    1.528_225_940_865_187e-5,
    7.637_197_637_899_762e-6,
    3.817_293_264_999_840e-6,
    1.908_212_716_553_939e-6,
    9.539_620_338_727_961e-7,
    4.769_329_867_878_065e-7,
    2.384_505_027_277_330e-7,
    1.192_199_259_653_111e-7,
    5.960_818_905_125_948e-8,
    2.980_350_351_465_228e-8,
    1.490_155_482_836_504e-8,
    7.450_711_789_835_429e-9,
    3.725_334_024_788_457e-9,
    1.862_659_723_513_049e-9,
    9.313_274_324_196_682e-10,
    4.656_629_065_033_784e-10,
    2.328_311_833_676_505e-10,
    1.164_155_017_270_052e-10,
    5.820_772_087_902_701e-11,
    2.910_385_044_497_100e-11,
    1.455_192_189_104_198e-11,
    7.275_959_835_057_481e-12,
    3.637_979_547_378_651e-12,
    1.818_989_650_307_066e-12,
    9.094_947_840_263_889e-13,
];

/// ln Gamma(1 + z) for |z| <= 0.5.
fn ln_gamma_1p_small(z: f64) -> f64 {
    // ln G(1+z) = -ln(1+z) + z(1-gamma) + sum_{k>=2} (zeta(k)-1) (-z)^k / k
    let mz = -z;
    let mut power = mz;
    let mut sum = 0.0;
    for (i, zm1) in ZETA_MINUS_ONE.iter().enumerate() {
        power *= mz;
        let term = zm1 * power / (i + 2) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    -z.ln_1p() + z * (1.0 - EULER_GAMMA) + sum
}

/// Stirling correction ln Gamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2], for x >= 10.
pub(crate) fn stirling_correction(x: f64) -> f64 {
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_finite("x", x)?;
    if x <= 0.0 {
        return Err(DolError::domain(format!(
            "ln_gamma requires x > 0, got {x}"
        )));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        ln_gamma_1p_small(x) - x.ln()
    } else if x < 1.5 {
        ln_gamma_1p_small(x - 1.0)
    } else if x < 2.5 {
        let z = x - 2.0;
        z.ln_1p() + ln_gamma_1p_small(z)
    } else if x < 10.0 {
        let mut y = x;
        let mut prod = 1.0;
        while y < 10.0 {
            prod *= y;
            y += 1.0;
        }
        ln_gamma_stirling(y) - prod.ln()
    } else {
        ln_gamma_stirling(x)
    }
}

fn ln_gamma_stirling(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_correction(x)
}

/// Digamma function psi(x) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_finite("x", x)?;
    if x <= 0.0 {
        return Err(DolError::domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32_760.0,
        1.0 / 12.0,
    ];
    let inv2 = 1.0 / (x * x);
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    shift + x.ln() - 0.5 / x - acc * inv2
}
