//! Closed-form guarantees, evaluated exactly as stated so Monte Carlo runs can
//! be checked against them.
//!
//! Notation: `n` ambient dimension, `r` subspace dimension, `N` points,
//! `N_I` inliers, `N_Os` structured outliers, `p_I` the probability that an
//! inlier-inlier acute angle exceeds the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RomaError};
use crate::stats::normal_sf;
use crate::threshold::compute_cn;

/// Multiplier applied to the per-point angle shift in the noisy bounds.
///
/// The default counts one shifted endpoint per angle. The worst-case factor
/// lets both endpoints move apart.
pub const NOISE_SHIFT_FACTOR: f64 = 1.0;
pub const NOISE_SHIFT_FACTOR_WORST_CASE: f64 = 2.0;

/// A bound value together with whether it lands inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub raw: f64,
    pub in_unit_interval: bool,
}

impl Bound {
    fn new(raw: f64) -> Self {
        Self {
            raw,
            in_unit_interval: (0.0..=1.0).contains(&raw),
        }
    }

    pub fn clamped(&self) -> f64 {
        self.raw.clamp(0.0, 1.0)
    }
}

fn check_dims(n: usize, r: usize) -> Result<()> {
    if n < 3 {
        return Err(RomaError::Dimension { n });
    }
    if r < 3 || r > n {
        return Err(RomaError::Domain(format!(
            "subspace dimension must satisfy 3 <= r <= n, got r={r}, n={n}"
        )));
    }
    Ok(())
}

/// `p_I = 2 F(C_N sqrt((r-2)/(n-2))) - 1`.
///
/// The Gaussian approximation behind it is only claimed for `r >= 5`; smaller
/// `r` still evaluates.
pub fn p_inlier(n: usize, r: usize, num_points: usize) -> Result<f64> {
    check_dims(n, r)?;
    let c_n = compute_cn(num_points)?;
    let arg = c_n * ((r - 2) as f64 / (n - 2) as f64).sqrt();
    // 2F(x) - 1 = 1 - 2 sf(x), kept accurate near 1
    Ok(1.0 - 2.0 * normal_sf(arg))
}

/// `(N_I - 2) p_I^2 - (N_I - 3) p_I`: below this value of `alpha` exact
/// inlier recovery with probability `1 - alpha` is impossible. May be negative.
pub fn erp_impossibility_alpha(n: usize, r: usize, num_points: usize, n_inliers: usize) -> Result<Bound> {
    need_inliers(n_inliers)?;
    let p = p_inlier(n, r, num_points)?;
    let ni = n_inliers as f64;
    Ok(Bound::new((ni - 2.0) * p * p - (ni - 3.0) * p))
}

/// Lower bound on the probability that the first-stage inlier estimate is non-empty.
///
/// Uses the tightened Kwerel-type bound when either of its two conditions
/// holds, and `1 - p_I^2` otherwise.
pub fn nonempty_prob_lower_bound(n: usize, r: usize, num_points: usize, n_inliers: usize) -> Result<Bound> {
    need_inliers(n_inliers)?;
    let p = p_inlier(n, r, num_points)?;
    let ni = n_inliers as f64;
    let z = ((ni - 2.0) * p).floor();
    let cond1 = ((ni - 2.0) * p + 1.0).floor() == ((ni - 1.0) * p).floor();
    let cond2 = p * (2.0 - p) >= (1.0 + (ni - 2.0) * p).floor() / (ni - 1.0);
    let raw = if cond1 || cond2 {
        let num = (ni - 1.0) * (ni - 2.0) * p * p - z * (2.0 * p * (ni - 1.0) - (z + 1.0));
        1.0 - num / ((ni - z) * (ni - 1.0 - z))
    } else {
        1.0 - p * p
    };
    Ok(Bound::new(raw))
}

/// Largest `r` for which the first stage keeps a sizable share of inliers:
/// `2 (n-2) / (pi C_N^2) + 2`.
pub fn max_rank_sizable(n: usize, num_points: usize) -> Result<f64> {
    max_rank_with_shift(n, num_points, 0.0)
}

/// Noisy variant of [`max_rank_sizable`] using [`noise_shift_bound`].
pub fn max_rank_sizable_noisy(n: usize, num_points: usize, snr: f64) -> Result<f64> {
    max_rank_with_shift(n, num_points, noise_shift_bound(snr)?)
}

/// As [`max_rank_sizable_noisy`] with the angle shift scaled by `factor`.
pub fn max_rank_sizable_noisy_with_factor(n: usize, num_points: usize, snr: f64, factor: f64) -> Result<f64> {
    max_rank_with_shift(n, num_points, factor * noise_shift_bound(snr)?)
}

fn max_rank_with_shift(n: usize, num_points: usize, shift: f64) -> Result<f64> {
    if n < 3 {
        return Err(RomaError::Dimension { n });
    }
    let c_n = compute_cn(num_points)?;
    let s = ((n - 2) as f64).sqrt();
    let denom = c_n + s * shift;
    Ok(2.0 * (n - 2) as f64 / (std::f64::consts::PI * denom * denom) + 2.0)
}

/// Bound on the average change of an inlier angle under noise,
/// `arccos(1 - 1/(2 sqrt(snr)))`, with `snr = ||m||^2 / (n sigma^2)`.
pub fn noise_shift_bound(snr: f64) -> Result<f64> {
    if snr.is_infinite() && snr > 0.0 {
        return Ok(0.0);
    }
    if !(snr >= 0.25) {
        return Err(RomaError::Domain(format!(
            "noise shift bound needs snr >= 1/4, got {snr}"
        )));
    }
    Ok((1.0 - 1.0 / (2.0 * snr.sqrt())).acos())
}

fn check_counts(num_points: usize, n_inliers: usize, n_structured: usize) -> Result<()> {
    if n_inliers + n_structured > num_points || num_points < 2 {
        return Err(RomaError::Domain(format!(
            "N_I + N_Os = {} exceeds N = {num_points}",
            n_inliers + n_structured
        )));
    }
    Ok(())
}

fn union_term(num_points: usize, n_inliers: usize, n_structured: usize) -> f64 {
    let n = num_points as f64;
    (n_structured as f64) * (n_inliers as f64) / (n * n * (n - 1.0))
}

/// Probability that every outlier has `na >= N_I` (and every inlier `na >= N_Os`).
pub fn na_bound_prob(num_points: usize, n_inliers: usize, n_structured: usize) -> Result<f64> {
    check_counts(num_points, n_inliers, n_structured)?;
    Ok(1.0 - union_term(num_points, n_inliers, n_structured))
}

/// Probability that the second stage separates inliers and structured outliers exactly.
pub fn structured_exact_prob(num_points: usize, n_inliers: usize, n_structured: usize) -> Result<f64> {
    check_counts(num_points, n_inliers, n_structured)?;
    Ok(1.0 - 2.0 * union_term(num_points, n_inliers, n_structured))
}

/// Whether the inlier/outlier gap `N_I - N_Os` exceeds `2 (N_I - 1) p_I`.
pub fn sizable_cluster_gap_condition(
    n: usize,
    r: usize,
    num_points: usize,
    n_inliers: usize,
    n_structured: usize,
) -> Result<bool> {
    if n_inliers <= n_structured {
        return Err(RomaError::Domain(format!(
            "gap condition needs N_I > N_Os, got {n_inliers} <= {n_structured}"
        )));
    }
    let p = p_inlier(n, r, num_points)?;
    Ok(gap_condition_for(p, n_inliers, n_structured))
}

pub(crate) fn gap_condition_for(p_inlier: f64, n_inliers: usize, n_structured: usize) -> bool {
    (n_inliers - n_structured) as f64 > 2.0 * (n_inliers as f64 - 1.0) * p_inlier
}

fn need_inliers(n_inliers: usize) -> Result<()> {
    if n_inliers < 3 {
        return Err(RomaError::Domain(format!(
            "bound needs N_I >= 3, got {n_inliers}"
        )));
    }
    Ok(())
}

/// Per-trial outcome needed to estimate the exact-recovery `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTrial {
    pub n_inliers: usize,
    /// True inliers whose score exceeded the threshold.
    pub inliers_rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErpAlphaEstimate {
    /// `N_I * P(q_i > zeta)` for an inlier, the union-bound alpha.
    pub union_bound_alpha: f64,
    /// Fraction of trials that lost at least one inlier.
    pub failure_fraction: f64,
    pub trials: usize,
}

pub fn erp_alpha_estimate(trials: &[RecoveryTrial]) -> Result<ErpAlphaEstimate> {
    if trials.is_empty() {
        return Err(RomaError::Domain("no trials to estimate alpha from".into()));
    }
    let total_inliers: usize = trials.iter().map(|t| t.n_inliers).sum();
    let rejected: usize = trials.iter().map(|t| t.inliers_rejected).sum();
    let p_reject = if total_inliers == 0 {
        0.0
    } else {
        rejected as f64 / total_inliers as f64
    };
    let mean_ni = total_inliers as f64 / trials.len() as f64;
    let failures = trials.iter().filter(|t| t.inliers_rejected > 0).count();
    Ok(ErpAlphaEstimate {
        union_bound_alpha: mean_ni * p_reject,
        failure_fraction: failures as f64 / trials.len() as f64,
        trials: trials.len(),
    })
}

/// Inputs for a [`TheoryReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub n: usize,
    pub r: usize,
    pub num_points: usize,
    pub n_inliers: usize,
    pub n_structured: usize,
    /// Per-point `snr`; `None` means noiseless.
    pub snr: Option<f64>,
}

/// Every bound evaluated for one parameter set.
///
/// `erp_impossibility_alpha` and `nonempty_prob_lb` are reported raw, with a
/// range flag, since a negative impossibility bound means no regime is excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub params: TheoryParams,
    pub p_inlier: f64,
    pub oip_alpha: f64,
    pub erp_impossibility_alpha: Bound,
    pub nonempty_prob_lb: Bound,
    pub max_rank_sizable: f64,
    pub max_rank_sizable_noisy: Option<f64>,
    pub noise_shift_bound: Option<f64>,
    pub noise_shift_factor: f64,
    pub na_bound_prob: f64,
    pub structured_exact_prob: f64,
}

impl TheoryReport {
    pub fn evaluate(params: TheoryParams) -> Result<Self> {
        let TheoryParams {
            n,
            r,
            num_points,
            n_inliers,
            n_structured,
            snr,
        } = params;
        Ok(Self {
            params,
            p_inlier: p_inlier(n, r, num_points)?,
            oip_alpha: 1.0 / num_points as f64,
            erp_impossibility_alpha: erp_impossibility_alpha(n, r, num_points, n_inliers)?,
            nonempty_prob_lb: nonempty_prob_lower_bound(n, r, num_points, n_inliers)?,
            max_rank_sizable: max_rank_sizable(n, num_points)?,
            max_rank_sizable_noisy: snr
                .map(|s| max_rank_sizable_noisy(n, num_points, s))
                .transpose()?,
            noise_shift_bound: snr.map(noise_shift_bound).transpose()?,
            noise_shift_factor: NOISE_SHIFT_FACTOR,
            na_bound_prob: na_bound_prob(num_points, n_inliers, n_structured)?,
            structured_exact_prob: structured_exact_prob(num_points, n_inliers, n_structured)?,
        })
    }
}

/// Converts decibels to the per-point `snr` used above, for unit-norm points
/// and the noise level `sigma = ||M||_F / (10^(db/20) sqrt(nN))`.
pub fn snr_from_db(db: f64) -> f64 {
    // ||m||^2 / (n sigma^2) with ||M||_F^2 = N gives 10^(db/10)
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_cdf;

    fn two_f_minus_one(x: f64) -> f64 {
        2.0 * normal_cdf(x) - 1.0
    }

    // mpmath, 50 digits
    #[test]
    fn p_inlier_values() {
        let cases = [
            ((100, 10, 1000), 0.919_102_153_085_195_4),
            ((100, 20, 1000), 0.991_161_802_989_839_3),
            ((100, 40, 1000), 0.999_857_753_671_201_8),
            ((300, 6, 400), 0.487_576_932_646_777),
        ];
        for ((n, r, big), want) in cases {
            let got = p_inlier(n, r, big).unwrap();
            assert!((got - want).abs() < 1e-12, "{n},{r},{big}: {got}");
            assert!((got - two_f_minus_one(compute_cn(big).unwrap() * ((r - 2) as f64 / (n - 2) as f64).sqrt())).abs() < 1e-14);
        }
        let full = p_inlier(50, 50, 100).unwrap();
        assert!((full - (1.0 - 1.0 / (100.0f64.powi(2) * 99.0))).abs() < 1e-13);
        assert!(p_inlier(100, 2, 1000).is_err());
        assert!(p_inlier(100, 101, 1000).is_err());
    }

    #[test]
    fn p_inlier_increases_with_rank() {
        let mut prev = 0.0;
        for r in 3..=100 {
            let p = p_inlier(100, r, 1000).unwrap();
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn erp_impossibility_values() {
        let b = erp_impossibility_alpha(100, 20, 1000, 100).unwrap();
        assert!((b.raw - 0.132_673_641_180_352_2).abs() < 1e-10);
        assert!(b.in_unit_interval);
        let b = erp_impossibility_alpha(100, 40, 1000, 100).unwrap();
        assert!((b.raw - 0.985_919_596_382_747).abs() < 1e-10);
        let b = erp_impossibility_alpha(100, 10, 1000, 100).unwrap();
        assert!((b.raw + 6.367_529_604_291_44).abs() < 1e-9);
        assert!(!b.in_unit_interval);
        assert_eq!(b.clamped(), 0.0);
    }

    #[test]
    fn nonempty_values() {
        let b = nonempty_prob_lower_bound(100, 10, 1000, 200).unwrap();
        assert!((b.raw - 0.951_725_014_226_670_5).abs() < 1e-9);
        let b = nonempty_prob_lower_bound(300, 6, 400, 100).unwrap();
        assert!((b.raw - 0.990_900_653_034_391_5).abs() < 1e-9);
        // p_I -> 0: r = 3 in a huge ambient space
        let b = nonempty_prob_lower_bound(10_000_000, 3, 10, 5).unwrap();
        assert!(b.raw > 1.0 - 1e-6);
    }

    #[test]
    fn rank_ceilings() {
        let v = max_rank_sizable(300, 400).unwrap();
        assert!((v - 7.934_245_073_046_416).abs() < 1e-10);
        let v = max_rank_sizable(100, 1000).unwrap();
        assert!((v - 3.671_592_179_284_711).abs() < 1e-10);
        let v = max_rank_sizable_noisy(300, 400, 100.0).unwrap();
        assert!((v - 3.529_792_727_233_856_6).abs() < 1e-10);
        let v = max_rank_sizable_noisy(300, 400, 1000.0).unwrap();
        assert!((v - 4.490_403_893_390_812).abs() < 1e-10);
        assert_eq!(
            max_rank_sizable_noisy(300, 400, f64::INFINITY).unwrap(),
            max_rank_sizable(300, 400).unwrap()
        );
        let a = max_rank_sizable(1000, 400).unwrap() - 2.0;
        let b = max_rank_sizable(2000, 400).unwrap() - 2.0;
        assert!((b / a - 1998.0 / 998.0).abs() < 1e-12);
        assert!(
            max_rank_sizable_noisy_with_factor(300, 400, 100.0, NOISE_SHIFT_FACTOR_WORST_CASE).unwrap()
                < max_rank_sizable_noisy(300, 400, 100.0).unwrap()
        );
    }

    #[test]
    fn noise_shift_values() {
        assert_eq!(noise_shift_bound(f64::INFINITY).unwrap(), 0.0);
        assert!((noise_shift_bound(0.25).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((noise_shift_bound(100.0).unwrap() - 0.317_560_429_291_521_4).abs() < 1e-14);
        assert!(noise_shift_bound(0.2).is_err());
        assert!(noise_shift_bound(0.0).is_err());
    }

    #[test]
    fn na_probabilities() {
        assert!((na_bound_prob(1000, 900, 100).unwrap() - 0.999_909_909_909_909_9).abs() < 1e-15);
        assert!((na_bound_prob(1000, 300, 700).unwrap() - 0.999_789_789_789_789_8).abs() < 1e-15);
        assert!((structured_exact_prob(1000, 300, 700).unwrap() - 0.999_579_579_579_579_6).abs() < 1e-15);
        assert_eq!(na_bound_prob(1000, 900, 0).unwrap(), 1.0);
        assert_eq!(structured_exact_prob(1000, 900, 0).unwrap(), 1.0);
        assert!(na_bound_prob(100, 90, 20).is_err());
    }

    #[test]
    fn gap_condition() {
        assert!(!sizable_cluster_gap_condition(100, 10, 1000, 900, 100).unwrap());
        assert!(gap_condition_for(0.0, 11, 10));
        assert!(!gap_condition_for(0.1, 11, 10));
        assert!(sizable_cluster_gap_condition(100, 10, 1000, 10, 10).is_err());
    }

    #[test]
    fn erp_alpha_from_trials() {
        assert!(erp_alpha_estimate(&[]).is_err());
        let trials = [
            RecoveryTrial { n_inliers: 100, inliers_rejected: 0 },
            RecoveryTrial { n_inliers: 100, inliers_rejected: 2 },
            RecoveryTrial { n_inliers: 100, inliers_rejected: 0 },
            RecoveryTrial { n_inliers: 100, inliers_rejected: 0 },
        ];
        let e = erp_alpha_estimate(&trials).unwrap();
        assert_eq!(e.failure_fraction, 0.25);
        assert!((e.union_bound_alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn report_evaluates() {
        let rep = TheoryReport::evaluate(TheoryParams {
            n: 100,
            r: 20,
            num_points: 1000,
            n_inliers: 100,
            n_structured: 0,
            snr: Some(snr_from_db(20.0)),
        })
        .unwrap();
        assert_eq!(rep.oip_alpha, 1e-3);
        assert!(rep.max_rank_sizable_noisy.unwrap() < rep.max_rank_sizable);
        assert!((rep.erp_impossibility_alpha.raw - 0.1327).abs() < 1e-4);
    }
}
