use roma::{lre, recover_subspace, roma, RankRule, SynthSpec, ThresholdMode};

fn main() -> roma::Result<()> {
    let data = SynthSpec::with_counts(100, 20, 400, 900, 9).generate()?;
    let u = data.true_basis();

    let res = roma(&data.matrix, ThresholdMode::Theoretical)?;
    let est = recover_subspace(&data.matrix, &res.partition.inliers, RankRule::default())?;
    println!("kept {} of {} points", res.partition.inliers.len(), data.matrix.num_points());
    println!("numerical rank {} (true 20)", est.rank());
    println!("LRE after filtering  {:.2}", lre(u, &est.basis)?);

    // plain SVD on everything, for contrast
    let all: Vec<usize> = (0..data.matrix.num_points()).collect();
    let naive = recover_subspace(&data.matrix, &all, RankRule::Fixed(20))?;
    println!("LRE without filtering {:.2}", lre(u, &naive.basis)?);
    Ok(())
}
