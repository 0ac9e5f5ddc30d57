//! Nonnegative data (counts, intensities) sits in one orthant, so random pairs
//! are closer than a right angle. Centring the threshold on the observed mean
//! angle keeps it meaningful.

use roma::{DataMatrix, Detector, SynthSpec, ThresholdMode};

fn main() -> roma::Result<()> {
    let data = SynthSpec::new(80, 5, 300, 0.3, 7).generate()?;
    let nonneg = DataMatrix::new(data.matrix.values().map(f64::abs))?;
    let truth = data.outlier_indices();

    for (name, m) in [("signed", &data.matrix), ("nonnegative", &nonneg)] {
        for mode in [ThresholdMode::Theoretical, ThresholdMode::Adapted] {
            let res = Detector::new(mode).roma(m)?;
            let caught = truth.iter().filter(|i| res.partition.outliers.contains(i)).count();
            println!(
                "{name:<12} {:<12} centre {:.4}  zeta {:.4}  flagged {:>3}  true outliers caught {caught}/{}",
                format!("{mode:?}"),
                res.threshold.center,
                res.threshold.zeta,
                res.partition.outliers.len(),
                truth.len()
            );
        }
    }
    Ok(())
}
