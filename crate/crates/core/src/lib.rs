//! Parameter-free outlier identification for robust PCA.
//!
//! Points are the columns of an `n x N` matrix. [`roma`] flags a point as an
//! outlier when even its closest neighbour (by acute angle) is farther than a
//! threshold that depends only on `n` and `N`. [`roma_n`] adds a second stage
//! for clustered outliers that survive the first. The remaining modules give
//! the closed-form guarantees, synthetic data generators, subspace recovery
//! and a Monte Carlo harness.
//!
//! ```
//! use roma::{roma, DataMatrix, ThresholdMode};
//! use nalgebra::DMatrix;
//!
//! // four points along one line and one orthogonal point in R^200
//! let m = DMatrix::from_fn(200, 5, |i, j| match (i, j) {
//!     (0, j) if j < 4 => 1.0 + j as f64,
//!     (1, 4) => 1.0,
//!     _ => 0.0,
//! });
//! let res = roma(&DataMatrix::new(m).unwrap(), ThresholdMode::Theoretical).unwrap();
//! assert_eq!(res.partition.outliers, vec![4]);
//! ```

pub mod angles;
pub mod data;
pub mod detector;
pub mod error;
pub mod experiments;
pub mod stats;
pub mod subspace;
pub mod synth;
pub mod theory;
pub mod threshold;

pub use angles::{AngleEngine, AngleScores, AngleTable};
pub use data::{load_csv_matrix, normalize_columns, DataMatrix, Label, NormalizedMatrix, Orientation, Partition};
pub use detector::{roma, roma_n, Detector, RomaNResult, RomaResult};
pub use error::{Result, RomaError};
pub use experiments::{run_detect, run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport, Stage};
pub use subspace::{lre, recover_subspace, RankRule, SubspaceBasis};
pub use synth::{SynthDataset, SynthSpec};
pub use threshold::{compute_cn, compute_zeta, ThresholdMode, ThresholdSpec};
