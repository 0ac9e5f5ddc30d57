use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use roma::stats::{angle_pdf, normal_cdf, normal_quantile, phi_moments};
use roma::synth::{stream_rng, SynthRng};
use roma::theory::{
    erp_impossibility_alpha, max_rank_sizable, max_rank_sizable_noisy, na_bound_prob, noise_shift_bound,
    nonempty_prob_lower_bound, p_inlier, structured_exact_prob, sizable_cluster_gap_condition,
};
use roma::{compute_cn, compute_zeta};

// Reference values below were computed with mpmath at 50 digits.

fn close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "got {got}, want {want} (tol {tol:e})");
}

#[test]
fn cn_reference_values() {
    close(compute_cn(1000).unwrap(), 6.109_250_513_984_572_6, 1e-12);
    close(compute_cn(400).unwrap(), 5.654_125_638_510_760_6, 1e-12);
    close(compute_cn(500).unwrap(), 5.768_120_842_375_320, 1e-12);
    close(compute_cn(2).unwrap(), 1.150_349_380_376_008_2, 1e-12);
    close(compute_cn(2).unwrap(), normal_quantile(0.875).unwrap(), 1e-14);
}

#[test]
fn zeta_reference_values() {
    close(compute_zeta(100, 1000).unwrap().zeta, 0.953_668_831_594_054_9, 1e-12);
    close(compute_zeta(300, 500).unwrap().zeta, 1.236_658_057_921_585_8, 1e-12);
}

#[test]
fn theory_reference_values() {
    close(p_inlier(100, 10, 1000).unwrap(), 0.919_102_153_085_195_4, 1e-12);
    close(p_inlier(100, 20, 1000).unwrap(), 0.991_161_802_989_839_3, 1e-12);
    close(p_inlier(300, 6, 400).unwrap(), 0.487_576_932_646_777, 1e-12);

    let a = erp_impossibility_alpha(100, 20, 1000, 100).unwrap();
    close(a.raw, 0.132_673_641_180_352_2, 1e-10);
    let a = erp_impossibility_alpha(100, 40, 1000, 100).unwrap();
    close(a.raw, 0.985_919_596_382_747, 1e-10);
    let a = erp_impossibility_alpha(100, 10, 1000, 100).unwrap();
    close(a.raw, -6.367_529_604_291_44, 1e-9);
    assert!(!a.in_unit_interval);

    assert!(nonempty_prob_lower_bound(100, 10, 1000, 200).unwrap().raw > 0.946);
    assert!(nonempty_prob_lower_bound(300, 6, 400, 100).unwrap().raw > 0.99);

    close(max_rank_sizable(300, 400).unwrap(), 7.934_245_073_046_416, 1e-10);
    close(max_rank_sizable(100, 1000).unwrap(), 3.671_592_179_284_711, 1e-10);
    close(noise_shift_bound(100.0).unwrap(), 0.317_560_429_291_521_4, 1e-14);
    close(max_rank_sizable_noisy(300, 400, 100.0).unwrap(), 3.529_792_727_233_856_6, 1e-10);

    close(na_bound_prob(1000, 900, 100).unwrap(), 0.999_909_909_909_909_9, 1e-15);
    close(na_bound_prob(1000, 300, 700).unwrap(), 0.999_789_789_789_789_8, 1e-15);
    close(structured_exact_prob(1000, 300, 700).unwrap(), 0.999_579_579_579_579_6, 1e-15);
    assert!(!sizable_cluster_gap_condition(100, 10, 1000, 900, 100).unwrap());
}

fn sphere(n: usize, rng: &mut SynthRng) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = v.norm();
    v / norm
}

fn principal_angles(n: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| sphere(n, &mut rng).dot(&sphere(n, &mut rng)).clamp(-1.0, 1.0).acos())
        .collect()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    (mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0))
}

#[test]
fn random_pair_angles_centre_on_right_angle() {
    let k = 50_000;
    let theta = principal_angles(100, k, 21);
    let (mean, var) = mean_var(&theta);
    let m4 = theta.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / k as f64;
    let se_mean = (var / k as f64).sqrt();
    let se_var = ((m4 - var * var) / k as f64).sqrt();
    assert!((mean - FRAC_PI_2).abs() <= 3.0 * se_mean, "mean {mean}");
    // exact variance under the sin^(n-2) law; 1/(n-2) is its large-n form, 1% high at n = 100
    let exact = 0.010_100_666_613_348_563;
    assert!((var - exact).abs() <= 3.0 * se_var, "var {var}");
    assert!((var - 1.0 / 98.0).abs() <= (exact - 1.0 / 98.0).abs() + 3.0 * se_var);
}

#[test]
fn gaussian_approximation_passes_ks() {
    let k = 20_000;
    let mut theta = principal_angles(100, k, 22);
    theta.sort_by(f64::total_cmp);
    let sd = 1.0 / 98f64.sqrt();
    let d = theta
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = normal_cdf((t - FRAC_PI_2) / sd);
            (f - i as f64 / k as f64).abs().max(((i + 1) as f64 / k as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample KS statistic
    assert!(d < 1.63 / (k as f64).sqrt(), "D = {d}");
}

#[test]
fn acute_angle_moments_match_sampling() {
    let k = 100_000;
    let phi: Vec<f64> = principal_angles(102, k, 23).into_iter().map(|t| t.min(PI - t)).collect();
    let (mean, var) = mean_var(&phi);
    let se = (var / k as f64).sqrt();
    let approx = phi_moments(102).unwrap();
    close(approx.mean, 1.491_007_870_714_610, 1e-14);
    assert!((mean - approx.mean).abs() <= 3.0 * se, "mean {mean} vs {}", approx.mean);
    // exact mean under the sin^(n-2) law
    assert!((mean - 1.491_339_268_860_25).abs() <= 3.0 * se);
}

#[test]
fn angle_density_integrates_to_one() {
    for d in [3, 5, 100, 2000] {
        let intervals = 100_000;
        let h = PI / intervals as f64;
        let total: f64 = (0..=intervals)
            .map(|k| {
                let w = if k == 0 || k == intervals { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * angle_pdf(k as f64 * h, d).unwrap()
            })
            .sum::<f64>()
            * h
            / 3.0;
        close(total, 1.0, 1e-8);
    }
}
