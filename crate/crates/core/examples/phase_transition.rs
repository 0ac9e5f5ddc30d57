use roma::{run_experiment, ExperimentConfig, ExperimentKind};

// Fraction of trials recovering the subspace (LRE < -5) over a coarse N_I x N_O grid.
fn main() -> roma::Result<()> {
    let mut config = ExperimentConfig::defaults_for(ExperimentKind::PhaseRecovery);
    config.n_inliers = vec![50, 100, 400];
    config.n_outliers = vec![100, 500, 1000];
    config.trials = 5;
    config.seed = 5;
    let report = run_experiment(&config)?;

    print!("N_I \\ N_O");
    for n_o in &config.n_outliers {
        print!("{n_o:>7}");
    }
    println!();
    for n_i in config.n_inliers.iter().rev() {
        print!("{n_i:<9}");
        for n_o in &config.n_outliers {
            let cell = report
                .summary
                .iter()
                .find(|s| s.n_inliers == *n_i && s.n_outliers == *n_o)
                .expect("grid cell");
            print!("{:>7.2}", cell.recovery_rate.unwrap_or(f64::NAN));
        }
        println!();
    }
    Ok(())
}
