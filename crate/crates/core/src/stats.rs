//! Scalar statistics: the standard normal distribution, the law of the angle
//! between two random points on a sphere, and folded-Gaussian moments.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RomaError};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF, `erfc(-x / sqrt 2) / 2`.
///
/// Accurate to a few ulps relative in both tails, so `1 - normal_cdf(x)` should
/// never be used for large positive `x`; use [`normal_sf`] instead.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - F(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse of [`normal_cdf`] on the open interval (0, 1).
///
/// Acklam's rational approximation supplies the starting point; two Halley
/// steps against the erfc-based CDF bring it to full double precision.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RomaError::Domain(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    if p <= 0.5 {
        Ok(lower_quantile(p))
    } else {
        // exact for p in [0.5, 1]
        Ok(-lower_quantile(1.0 - p))
    }
}

/// Inverse survival function: the `x` with `1 - F(x) = q`.
///
/// Use this when the tail mass is known directly; forming `1 - q` first throws
/// away most of the significant digits of a tiny `q`.
pub fn normal_quantile_upper(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(RomaError::Domain(format!(
            "upper-tail quantile needs 0 < q < 1, got {q}"
        )));
    }
    if q <= 0.5 {
        Ok(-lower_quantile(q))
    } else {
        Ok(lower_quantile(1.0 - q))
    }
}

// p in (0, 0.5]; returns x <= 0.
fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let mut x = acklam(p);
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e * SQRT_2PI * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Density of the principal angle between two independent uniform points on
/// the unit sphere in `R^dim`:
/// `Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)) * sin(theta)^(d-2)` on `[0, pi]`.
pub fn angle_pdf(theta: f64, dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(RomaError::Domain(format!(
            "angle density needs dimension >= 3, got {dim}"
        )));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(RomaError::Domain(format!(
            "angle {theta} outside [0, pi]"
        )));
    }
    let d = dim as f64;
    // sin(theta) written as cos of the distance to pi/2 keeps h(theta) = h(pi - theta)
    let s = (theta - FRAC_PI_2).abs().cos().max(0.0);
    if s == 0.0 || theta == 0.0 || theta == PI {
        return Ok(0.0);
    }
    let log_norm = libm::lgamma(d / 2.0) - libm::lgamma((d - 1.0) / 2.0) - 0.5 * PI.ln();
    Ok((log_norm + (d - 2.0) * s.ln()).exp())
}

/// Gaussian approximation `N(pi/2, 1/(d-2))` to [`angle_pdf`].
pub fn angle_pdf_gaussian(theta: f64, dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(RomaError::Domain(format!(
            "angle density needs dimension >= 3, got {dim}"
        )));
    }
    let sd = 1.0 / ((dim - 2) as f64).sqrt();
    Ok(normal_pdf((theta - FRAC_PI_2) / sd) / sd)
}

/// Mean and variance of `V = min(U, 2 mu - U)` for `U ~ N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldedMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn folded_gaussian_moments(mu: f64, sigma: f64) -> Result<FoldedMoments> {
    if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
        return Err(RomaError::Domain(format!(
            "folded moments need finite mu and sigma > 0, got ({mu}, {sigma})"
        )));
    }
    Ok(FoldedMoments {
        mean: mu - (2.0 / PI).sqrt() * sigma,
        variance: sigma * sigma * (1.0 - 2.0 / PI),
    })
}

/// Approximate moments of the acute angle between two uniform points in `R^n`.
pub fn phi_moments(n: usize) -> Result<FoldedMoments> {
    if n < 3 {
        return Err(RomaError::Domain(format!(
            "acute-angle moments need n >= 3, got {n}"
        )));
    }
    folded_gaussian_moments(FRAC_PI_2, 1.0 / ((n - 2) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values computed with mpmath at 50 digits
    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.7457) - 0.959_568_452_447_923_9).abs() < 1e-15);
        let tail = normal_sf(6.11);
        assert!((tail - 4.981_557_004_231_261e-10).abs() / tail < 1e-12);
        assert!(((1.0 - normal_cdf(6.11)) - tail).abs() < 1e-15);
    }

    #[test]
    fn quantile_reference_values() {
        let cases = [
            (1e-15, -7.941_345_326_170_997),
            (1e-10, -6.361_340_902_404_056),
            (0.001, -3.090_232_306_167_813_5),
            (0.3, -0.524_400_512_708_040_8),
            (0.975, 1.959_963_984_540_054_2),
        ];
        for (p, x) in cases {
            let got = normal_quantile(p).unwrap();
            assert!((got - x).abs() < 1e-12, "p={p}: {got} vs {x}");
        }
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        // 0.999999 is not representable; compare the tail form at the exact mass
        let x = normal_quantile_upper(1e-6).unwrap();
        assert!((x - 4.753_424_308_822_899).abs() < 1e-12);
        assert!((normal_quantile(0.999_999).unwrap() - x).abs() < 1e-10);
    }

    #[test]
    fn quantile_domain() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
        assert!(normal_quantile_upper(0.0).is_err());
    }

    #[test]
    fn upper_quantile_matches_tail() {
        let q = 1.0 / (2.0 * 1000f64.powi(2) * 999.0);
        let x = normal_quantile_upper(q).unwrap();
        assert!((x - 6.109_250_513_984_573).abs() < 1e-12);
    }

    #[test]
    fn angle_pdf_values() {
        assert!((angle_pdf(FRAC_PI_2, 3).unwrap() - 0.5).abs() < 1e-15);
        for d in [3, 10, 1000] {
            assert_eq!(angle_pdf(0.0, d).unwrap(), 0.0);
        }
        assert!(angle_pdf(1.0, 2).is_err());
        assert!(angle_pdf(-0.1, 5).is_err());
    }

    #[test]
    fn angle_pdf_large_dimension_is_finite() {
        let v = angle_pdf(FRAC_PI_2, 100_000).unwrap();
        // peak of N(pi/2, 1/(d-2)) is sqrt((d-2)/(2 pi))
        let approx = ((100_000.0 - 2.0) / (2.0 * PI)).sqrt();
        assert!((v / approx - 1.0).abs() < 1e-4);
    }

    #[test]
    fn folded_moments_formula() {
        let m = folded_gaussian_moments(FRAC_PI_2, 0.1).unwrap();
        assert!((m.mean - 1.491_007_870_714_610).abs() < 1e-14);
        assert!((m.variance - 0.003_633_802_276_324_187).abs() < 1e-15);
        let m = folded_gaussian_moments(0.0, 1.0).unwrap();
        assert!((m.mean + 0.797_884_560_802_865_4).abs() < 1e-15);
        let m = folded_gaussian_moments(2.0, 1e-300).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!(folded_gaussian_moments(0.0, 0.0).is_err());
        assert!(folded_gaussian_moments(0.0, -1.0).is_err());
    }

    #[test]
    fn phi_moments_cases() {
        let m = phi_moments(102).unwrap();
        assert!((m.mean - 1.491_007_870_714_610).abs() < 1e-14);
        let m = phi_moments(3).unwrap();
        assert!((m.mean - (FRAC_PI_2 - (2.0 / PI).sqrt())).abs() < 1e-15);
        let m = phi_moments(10_002).unwrap();
        assert!((m.mean - (FRAC_PI_2 - 0.01 * (2.0 / PI).sqrt())).abs() < 1e-15);
        assert!((m.variance - 1e-4 * (1.0 - 2.0 / PI)).abs() < 1e-18);
        assert!(phi_moments(2).is_err());
    }
}
