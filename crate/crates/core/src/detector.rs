//! The two detectors.
//!
//! [`roma`] flags every point whose minimum acute angle exceeds the threshold.
//! [`roma_n`] runs it and then splits the survivors into two clusters by how
//! many of their angles exceed the threshold, which catches outliers that are
//! clustered tightly enough to pass the first stage.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::angles::{AngleEngine, AngleScores, AngleSource};
use crate::data::{normalize_columns, DataMatrix, NormalizedMatrix, Partition};
use crate::error::{Result, RomaError};
use crate::threshold::{compute_zeta, with_center, ThresholdMode, ThresholdSpec};

/// First-stage output. `i` is an outlier exactly when `q_i > zeta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RomaResult {
    pub partition: Partition,
    pub scores: AngleScores,
    pub threshold: ThresholdSpec,
}

/// Two-stage output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RomaNResult {
    pub partition: Partition,
    pub stage1: RomaResult,
    /// Endpoint of the closest pair among first-stage inliers: the one with fewer
    /// angles above threshold, then the wider far angle, then the smaller index.
    pub inlier_head: usize,
    /// First-stage inlier forming the largest angle with `inlier_head`.
    pub outlier_head: usize,
    /// Counts above threshold restricted to first-stage inliers, aligned with
    /// `stage1.partition.inliers`.
    pub survivor_na: Vec<usize>,
    pub labels_swapped: bool,
}

/// Detector configuration. The defaults reproduce the plain algorithms.
#[derive(Debug, Clone, Copy, Default)]
pub struct Detector {
    pub mode: ThresholdMode,
    pub engine: AngleEngine,
    pub disambiguate_by_rank: bool,
}

impl Detector {
    pub fn new(mode: ThresholdMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn with_engine(mut self, engine: AngleEngine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_rank_disambiguation(mut self, on: bool) -> Self {
        self.disambiguate_by_rank = on;
        self
    }

    pub fn roma(&self, m: &DataMatrix) -> Result<RomaResult> {
        let x = normalize_columns(m)?;
        let source = self.engine.prepare(&x);
        self.stage1(&x, &source)
    }

    pub fn roma_n(&self, m: &DataMatrix) -> Result<RomaNResult> {
        let x = normalize_columns(m)?;
        let source = self.engine.prepare(&x);
        let stage1 = self.stage1(&x, &source)?;
        self.stage2(&x, &source, stage1)
    }

    fn stage1(&self, x: &NormalizedMatrix, source: &AngleSource<'_>) -> Result<RomaResult> {
        let n = x.ambient_dim();
        let big_n = x.num_points();
        let (threshold, mean_theta) = match self.mode {
            ThresholdMode::Theoretical => (compute_zeta(n, big_n)?, None),
            ThresholdMode::Adapted => {
                let center = self.engine.mean_principal(x)?;
                (
                    with_center(n, big_n, center, ThresholdMode::Adapted)?,
                    Some(center),
                )
            }
        };
        let scores = source.scores(threshold.zeta, mean_theta)?;
        let mask: Vec<bool> = scores.q.iter().map(|&q| q > threshold.zeta).collect();
        Ok(RomaResult {
            partition: Partition::from_outlier_mask(&mask),
            scores,
            threshold,
        })
    }

    fn stage2(
        &self,
        x: &NormalizedMatrix,
        source: &AngleSource<'_>,
        stage1: RomaResult,
    ) -> Result<RomaNResult> {
        let survivors = stage1.partition.inliers.clone();
        if survivors.len() < 2 {
            return Err(RomaError::DegenerateStage {
                survivors: survivors.len(),
            });
        }
        let zeta = stage1.threshold.zeta;
        let stats = source.subset_stats(&survivors, zeta);

        let na = &stats.above;

        // Closest pair. Which endpoint heads the inlier side is decided by the data
        // (fewer angles above threshold, then the wider far angle) so that relabelling
        // the columns cannot change the result; the smaller index only breaks exact ties.
        let first = stats
            .min_phi
            .iter()
            .enumerate()
            .fold(0, |best, (a, &v)| if v < stats.min_phi[best] { a } else { best });
        let second = stats.partner[first];
        let far_of = |pos: usize| farthest(source, &survivors, pos);
        let (f1, f2) = (far_of(first), far_of(second));
        let second_wins = na[second]
            .cmp(&na[first])
            .then(f1.1.total_cmp(&f2.1))
            .then(survivors[second].cmp(&survivors[first]))
            .is_lt();
        let (head_pos, (far_pos, _)) = if second_wins {
            (second, f2)
        } else {
            (first, f1)
        };
        let inlier_head = survivors[head_pos];
        let outlier_head = survivors[far_pos];

        let (na_in, na_out) = (na[head_pos] as i64, na[far_pos] as i64);
        let is_out: Vec<bool> = na
            .iter()
            .map(|&v| {
                let v = v as i64;
                (v - na_in).abs() > (v - na_out).abs()
            })
            .collect();

        let mut labels_swapped = false;
        let mut cluster_in: Vec<usize> = Vec::new();
        let mut cluster_out: Vec<usize> = Vec::new();
        for (a, &i) in survivors.iter().enumerate() {
            if is_out[a] {
                cluster_out.push(i);
            } else {
                cluster_in.push(i);
            }
        }
        if self.disambiguate_by_rank && !cluster_out.is_empty() {
            let ratio = |idx: &[usize]| numerical_rank(x, idx) as f64 / idx.len() as f64;
            if ratio(&cluster_out) < ratio(&cluster_in) {
                std::mem::swap(&mut cluster_in, &mut cluster_out);
                labels_swapped = true;
            }
        }

        let mut mask = vec![true; x.num_points()];
        for &i in &cluster_in {
            mask[i] = false;
        }
        Ok(RomaNResult {
            partition: Partition::from_outlier_mask(&mask),
            survivor_na: stats.above,
            stage1,
            inlier_head,
            outlier_head,
            labels_swapped,
        })
    }
}

// Position (within `subset`) of the point at the largest acute angle from `pos`.
fn farthest(source: &AngleSource<'_>, subset: &[usize], pos: usize) -> (usize, f64) {
    source
        .acute_row(subset[pos], subset)
        .iter()
        .enumerate()
        .filter(|&(b, _)| b != pos)
        .fold(None::<(usize, f64)>, |best, (b, &v)| match best {
            Some((_, bv)) if v <= bv => best,
            _ => Some((b, v)),
        })
        .expect("at least two survivors")
}

/// One-stage detection with the default engine.
pub fn roma(m: &DataMatrix, mode: ThresholdMode) -> Result<RomaResult> {
    Detector::new(mode).roma(m)
}

/// Two-stage detection with the default engine.
pub fn roma_n(m: &DataMatrix, mode: ThresholdMode, disambiguate_by_rank: bool) -> Result<RomaNResult> {
    Detector::new(mode)
        .with_rank_disambiguation(disambiguate_by_rank)
        .roma_n(m)
}

// Rank of the mean-centred columns, singular values above 1e-8 * sigma_max.
fn numerical_rank(x: &NormalizedMatrix, idx: &[usize]) -> usize {
    if idx.len() < 2 {
        return 0;
    }
    let sub: DMatrix<f64> = x.values().select_columns(idx);
    let mean = sub.column_mean();
    let mut centred = sub;
    for mut c in centred.column_iter_mut() {
        c -= &mean;
    }
    let sv = centred.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, cols: Vec<Vec<f64>>) -> DataMatrix {
        let flat: Vec<f64> = cols.into_iter().flatten().collect();
        DataMatrix::new(DMatrix::from_column_slice(n, flat.len() / n, &flat)).unwrap()
    }

    #[test]
    fn one_dimensional_data_has_no_outliers() {
        let base: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let cols: Vec<Vec<f64>> = (0..8)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 + k as f64 } else { -0.5 * k as f64 };
                base.iter().map(|v| v * s).collect()
            })
            .collect();
        let r = roma(&matrix(50, cols), ThresholdMode::Theoretical).unwrap();
        assert!(r.partition.outliers.is_empty());
        assert!(r.scores.q.iter().all(|&q| q < 1e-7));
    }

    #[test]
    fn orthogonal_points_are_all_outliers() {
        let n = 400;
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let r = roma(&matrix(n, cols), ThresholdMode::Theoretical).unwrap();
        assert_eq!(r.partition.outliers, vec![0, 1, 2, 3]);
        for (i, &q) in r.scores.q.iter().enumerate() {
            assert_eq!(r.partition.outliers.contains(&i), q > r.threshold.zeta);
        }
    }

    #[test]
    fn tight_cluster_ties_to_inlier_side() {
        let n = 50;
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|k| {
                (0..n)
                    .map(|i| if i == 0 { 1.0 } else if i == k + 1 { 0.01 } else { 0.0 })
                    .collect()
            })
            .collect();
        let r = roma_n(&matrix(n, cols), ThresholdMode::Theoretical, false).unwrap();
        assert!(r.stage1.partition.outliers.is_empty());
        assert!(r.survivor_na.iter().all(|&v| v == 0));
        assert_ne!(r.inlier_head, r.outlier_head);
        assert_eq!(r.partition, r.stage1.partition);
    }

    #[test]
    fn second_stage_needs_two_survivors() {
        let n = 400;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let err = roma_n(&matrix(n, cols), ThresholdMode::Theoretical, false).unwrap_err();
        assert!(matches!(err, RomaError::DegenerateStage { survivors: 0 }));
    }
}
