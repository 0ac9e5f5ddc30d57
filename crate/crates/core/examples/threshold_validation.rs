//! How often does every outlier clear the threshold?
//!
//! Small version of the validation sweep: 20 trials per outlier fraction.

use roma::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> roma::Result<()> {
    let mut config = ExperimentConfig::defaults_for(ExperimentKind::ValidateThreshold);
    config.trials = 20;
    config.seed = 3;
    let report = run_experiment(&config)?;

    println!("gamma  valid   mean zeta");
    for cell in &report.summary {
        let trials = report.trials.iter().filter(|t| t.cell == cell.cell);
        let zetas: Vec<f64> = trials.map(|t| t.zeta).collect();
        let mean_zeta = zetas.iter().sum::<f64>() / zetas.len() as f64;
        println!("{:<6.2} {:<7.3} {:.4}", cell.gamma, cell.threshold_valid_rate, mean_zeta);
    }
    Ok(())
}
