//! The parameter-free angle threshold `zeta = center - C_N / sqrt(n - 2)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::angles::{mean_principal_angle, AngleTable};
use crate::error::{Result, RomaError};
use crate::stats::normal_quantile_upper;

/// Where the threshold is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Centre at `pi/2`, the mean angle between random points.
    #[default]
    Theoretical,
    /// Centre at the sample mean of all principal angles.
    #[value(alias = "mean-adapted")]
    Adapted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub n: usize,
    pub num_points: usize,
    pub c_n: f64,
    pub zeta: f64,
    pub mode: ThresholdMode,
    pub center: f64,
}

/// `C_N`, the standard normal quantile at `1 - 1/(2 N^2 (N - 1))`.
///
/// Evaluated from the upper-tail mass directly so the tiny tail probability
/// keeps its precision.
pub fn compute_cn(num_points: usize) -> Result<f64> {
    if num_points < 2 {
        return Err(RomaError::TooFewPoints {
            required: 2,
            got: num_points,
        });
    }
    let n = num_points as f64;
    normal_quantile_upper(1.0 / (2.0 * n * n * (n - 1.0)))
}

/// Threshold centred at `pi/2`.
pub fn compute_zeta(n: usize, num_points: usize) -> Result<ThresholdSpec> {
    with_center(n, num_points, FRAC_PI_2, ThresholdMode::Theoretical)
}

/// Threshold centred at the sample mean of a principal-angle table.
pub fn compute_zeta_adapted(theta: &AngleTable, n: usize) -> Result<ThresholdSpec> {
    let center = mean_principal_angle(theta)?;
    with_center(n, theta.num_points(), center, ThresholdMode::Adapted)
}

/// Threshold for an arbitrary centre; used when the mean was computed elsewhere.
pub fn with_center(
    n: usize,
    num_points: usize,
    center: f64,
    mode: ThresholdMode,
) -> Result<ThresholdSpec> {
    if n < 3 {
        return Err(RomaError::Dimension { n });
    }
    let c_n = compute_cn(num_points)?;
    let zeta = center - c_n / ((n - 2) as f64).sqrt();
    if !(zeta > 0.0) {
        return Err(RomaError::DegenerateThreshold {
            zeta,
            n,
            num_points,
        });
    }
    Ok(ThresholdSpec {
        n,
        num_points,
        c_n,
        zeta,
        mode,
        center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // mpmath, 50 digits
    const CN_2: f64 = 1.150_349_380_376_008_2;
    const CN_400: f64 = 5.654_125_638_510_761;
    const CN_500: f64 = 5.768_120_842_375_32;
    const CN_1000: f64 = 6.109_250_513_984_573;

    #[test]
    fn cn_reference_values() {
        for (n, want) in [(2, CN_2), (400, CN_400), (500, CN_500), (1000, CN_1000)] {
            let got = compute_cn(n).unwrap();
            assert!((got - want).abs() < 1e-12, "N={n}: {got}");
        }
        assert!(compute_cn(1).is_err());
    }

    #[test]
    fn zeta_reference_values() {
        let t = compute_zeta(100, 1000).unwrap();
        assert!((t.zeta - 0.953_668_831_594_054_9).abs() < 1e-12);
        assert_eq!(t.mode, ThresholdMode::Theoretical);
        assert_eq!(t.center, FRAC_PI_2);
        let t = compute_zeta(300, 500).unwrap();
        assert!((t.zeta - 1.236_658_057_921_585_8).abs() < 1e-12);
    }

    #[test]
    fn zeta_errors() {
        assert!(matches!(compute_zeta(2, 10), Err(RomaError::Dimension { n: 2 })));
        // n = 3 with many points puts zeta below zero
        assert!(matches!(
            compute_zeta(3, 1000),
            Err(RomaError::DegenerateThreshold { .. })
        ));
    }

    #[test]
    fn zeta_monotone() {
        let mut prev = 0.0;
        for n in [50, 100, 1000, 100_000] {
            let z = compute_zeta(n, 500).unwrap().zeta;
            assert!(z > prev);
            prev = z;
        }
        assert!(FRAC_PI_2 - prev < 0.02);
        let mut prev = FRAC_PI_2;
        for big_n in [2, 10, 100, 1000, 10_000] {
            let z = compute_zeta(400, big_n).unwrap().zeta;
            assert!(z < prev);
            prev = z;
        }
    }
}
