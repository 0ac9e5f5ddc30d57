//! Flag outliers in a CSV matrix (one point per row).
//!
//! ```text
//! cargo run --example detect_csv -- points.csv
//! ```
//!
//! Without an argument a small demo file is written to the temp directory first.

use std::path::PathBuf;

use roma::{load_csv_matrix, roma, Orientation, SynthSpec, ThresholdMode};

fn main() -> roma::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("roma_demo.csv");
            SynthSpec::new(50, 4, 120, 0.25, 1).generate()?.export(&p, Orientation::PointsAsRows)?;
            println!("wrote demo data to {}", p.display());
            p
        }
    };

    let m = load_csv_matrix(&path, Orientation::PointsAsRows)?;
    let res = roma(&m, ThresholdMode::Theoretical)?;

    println!("n = {}, N = {}", m.ambient_dim(), m.num_points());
    println!("zeta = {:.4} rad (C_N = {:.4})", res.threshold.zeta, res.threshold.c_n);
    println!("{} outliers: {:?}", res.partition.outliers.len(), res.partition.outliers);
    Ok(())
}
