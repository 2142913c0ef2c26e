//! Small statistics helpers: Gaussian CDF/quantile and the one-sample
//! Kolmogorov–Smirnov statistic used by the ensemble diagnostics.

use alloc::vec::Vec;

use crate::math;

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.5066282746310002;

/// Standard normal CDF via the complementary error function.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * math::erfc(-z / SQRT_2)
}

/// Standard normal quantile (inverse CDF).
///
/// Rational initial guess (Acklam) polished with one Halley step against
/// `erfc`, giving close to full double precision over (0, 1).
pub fn norm_ppf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "norm_ppf requires p in (0,1)");

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = math::sqrt(-2.0 * math::ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = math::sqrt(-2.0 * math::ln(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley refinement.
    let e = norm_cdf(x) - p;
    let u = e * SQRT_2PI * math::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    x
}

/// One-sample KS statistic of `samples` against a Gaussian with the given
/// mean and standard deviation. Sorts a copy of the input.
pub fn ks_statistic_gaussian(samples: &[f64], mean: f64, std: f64) -> f64 {
    assert!(!samples.is_empty() && std > 0.0);
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = norm_cdf((x - mean) / std);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(math::abs(f - lo)).max(math::abs(hi - f));
    }
    d
}
