//! Empirical failure rates of the two guarantees: every outlier flagged (OIP)
//! and every inlier kept (ERP), by SNR and outlier fraction.

use roma::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> roma::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(25);
    let mut config = ExperimentConfig::defaults_for(ExperimentKind::OipErp);
    config.trials = trials;
    config.seed = 2;
    let report = run_experiment(&config)?;

    println!("{trials} trials per cell");
    println!("snr_db  gamma  alpha_oip  alpha_erp");
    for s in &report.summary {
        println!(
            "{:<7} {:<6} {:<10.3} {:.3}",
            s.snr_db.map_or("inf".into(), |d| d.to_string()),
            s.gamma,
            s.alpha_oip,
            s.alpha_erp
        );
    }
    Ok(())
}
