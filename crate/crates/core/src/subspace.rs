//! Subspace recovery from the estimated inliers, and the log recovery error.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Result, RomaError};

/// How many left singular vectors to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankRule {
    /// Keep singular values greater than `tol * sigma_max`.
    Auto { tol: f64 },
    Fixed(usize),
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule::Auto { tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    /// `n x r` with orthonormal columns.
    pub basis: DMatrix<f64>,
    /// All singular values of the inlier submatrix, nonincreasing.
    pub singular_values: Vec<f64>,
    pub rank_rule: RankRule,
}

impl SubspaceBasis {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

/// Thin SVD of the selected columns of `m`, without centering.
pub fn recover_subspace(m: &DataMatrix, inliers: &[usize], rank: RankRule) -> Result<SubspaceBasis> {
    if inliers.is_empty() {
        return Err(RomaError::Domain("cannot recover a subspace from zero inliers".into()));
    }
    let sub = m.values().select_columns(inliers);
    let max_rank = sub.nrows().min(sub.ncols());
    if let RankRule::Fixed(r) = rank {
        if r == 0 || r > max_rank {
            return Err(RomaError::Domain(format!(
                "fixed rank {r} outside 1..={max_rank}"
            )));
        }
    }

    let svd = sub.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();

    let keep = match rank {
        RankRule::Fixed(r) => r,
        RankRule::Auto { tol } => {
            let top = singular_values[0];
            singular_values.iter().filter(|&&s| s > tol * top).count().max(1)
        }
    };
    let basis = u.select_columns(&order[..keep]);
    Ok(SubspaceBasis {
        basis,
        singular_values,
        rank_rule: rank,
    })
}

/// Lowest value [`lre`] reports; stands in for an exact recovery.
pub const LRE_FLOOR: f64 = -16.0;

/// `log10(||U - Uh Uh^T U||_F / ||U||_F)`, floored at [`LRE_FLOOR`].
pub fn lre(true_basis: &DMatrix<f64>, est_basis: &DMatrix<f64>) -> Result<f64> {
    if true_basis.nrows() != est_basis.nrows() {
        return Err(RomaError::Domain(format!(
            "basis dimensions differ: {} vs {}",
            true_basis.nrows(),
            est_basis.nrows()
        )));
    }
    let proj = est_basis * (est_basis.transpose() * true_basis);
    let resid = (true_basis - proj).norm();
    let ratio = resid / true_basis.norm();
    if ratio <= 0.0 || !ratio.is_finite() {
        return Ok(LRE_FLOOR);
    }
    Ok(ratio.log10().max(LRE_FLOOR))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes(n: usize, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(n, idx.len(), |i, j| if i == idx[j] { 1.0 } else { 0.0 })
    }

    #[test]
    fn lre_edge_cases() {
        let u = axes(6, &[0, 1]);
        assert_eq!(lre(&u, &u).unwrap(), LRE_FLOOR);
        assert_eq!(lre(&u, &axes(6, &[2, 3, 4, 5])).unwrap(), 0.0);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let q = DMatrix::from_row_slice(2, 2, &[c, c, -c, c]);
        assert!(lre(&u, &(&u * q)).unwrap() < -15.0);
        assert!(lre(&u, &axes(5, &[0])).is_err());
    }

    #[test]
    fn single_point_basis() {
        let m = DataMatrix::new(DMatrix::from_column_slice(3, 2, &[3.0, 0.0, 4.0, 1.0, 1.0, 1.0])).unwrap();
        let b = recover_subspace(&m, &[0], RankRule::default()).unwrap();
        assert_eq!(b.rank(), 1);
        let v = b.basis.column(0);
        let s = v[0].signum();
        assert!((s * v[0] - 0.6).abs() < 1e-14 && (s * v[2] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let m = DataMatrix::new(DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        assert!(recover_subspace(&m, &[], RankRule::default()).is_err());
        assert!(recover_subspace(&m, &[0, 1], RankRule::Fixed(3)).is_err());
        assert_eq!(recover_subspace(&m, &[0, 1], RankRule::Fixed(2)).unwrap().rank(), 2);
    }
}
