// Clustered outliers outnumbering the inliers slip through the first stage;
// the second stage separates the two groups by their above-threshold counts.

use roma::synth::{InlierModel, OutlierModel};
use roma::{lre, recover_subspace, roma, roma_n, RankRule, SynthSpec, ThresholdMode};

fn main() -> roma::Result<()> {
    for mu in [0.2, 0.5, 5.0] {
        let data = SynthSpec::with_counts(200, 10, 300, 700, 42)
            .outliers(OutlierModel::Clustered { mu, literal: false })
            .inliers(InlierModel::Clustered { nu: 0.1, literal: false })
            .generate()?;
        let u = data.true_basis();

        let one = roma(&data.matrix, ThresholdMode::Theoretical)?;
        let two = roma_n(&data.matrix, ThresholdMode::Theoretical, false)?;

        let fit = |inliers: &[usize]| -> roma::Result<f64> {
            let est = recover_subspace(&data.matrix, inliers, RankRule::Fixed(10))?;
            lre(u, &est.basis)
        };
        println!(
            "mu = {mu:<4} stage one keeps {:>4} points (LRE {:>6.2}), two stages keep {:>4} (LRE {:>6.2})",
            one.partition.inliers.len(),
            fit(&one.partition.inliers)?,
            two.partition.inliers.len(),
            fit(&two.partition.inliers)?,
        );
    }
    Ok(())
}
