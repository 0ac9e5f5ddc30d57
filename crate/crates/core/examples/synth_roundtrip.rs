// Export a labelled synthetic set, read it back with its sidecar, and score the detector.

use roma::synth::load_labelled;
use roma::{roma, Label, Orientation, SynthSpec, ThresholdMode};

fn main() -> roma::Result<()> {
    let dir = std::env::temp_dir().join("roma_roundtrip");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("noisy.csv");

    SynthSpec::new(100, 10, 500, 0.4, 11)
        .snr_db(Some(20.0))
        .generate()?
        .export(&csv, Orientation::PointsAsColumns)?;

    let (m, sidecar) = load_labelled(&csv)?;
    println!("loaded {} x {} from {}", m.ambient_dim(), m.num_points(), csv.display());
    if let Some(noise) = &sidecar.noise {
        println!("noise sigma {:.4e} at {} dB", noise.sigma, noise.snr_db);
    }

    let res = roma(&m, ThresholdMode::Theoretical)?;
    let flagged = res.partition.outlier_mask();
    let (mut tp, mut fp, mut fneg) = (0, 0, 0);
    for (i, label) in sidecar.labels.iter().enumerate() {
        match (label, flagged[i]) {
            (Label::Outlier, true) => tp += 1,
            (Label::Inlier, true) => fp += 1,
            (Label::Outlier, false) => fneg += 1,
            _ => {}
        }
    }
    println!("outliers caught {tp}, missed {fneg}, inliers dropped {fp}");
    Ok(())
}
