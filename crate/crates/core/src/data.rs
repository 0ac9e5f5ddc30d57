//! Data matrices, column normalization, partitions and CSV ingestion.
//!
//! Points are stored one per column (`n x N`), whatever the file layout was.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomaError};

/// Ground-truth tag carried by synthetic data. Detectors never read it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Inlier,
    Outlier,
    Unknown,
}

/// Layout of a matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// One data point per row (the usual tabular convention).
    #[default]
    PointsAsRows,
    /// One data point per column.
    PointsAsColumns,
}

/// `n x N` collection of data points with optional ground truth.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    labels: Option<Vec<Label>>,
    true_basis: Option<DMatrix<f64>>,
}

impl DataMatrix {
    /// Validates and wraps a column-per-point matrix.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if n < 3 {
            return Err(RomaError::Dimension { n });
        }
        if values.ncols() < 2 {
            return Err(RomaError::TooFewPoints {
                required: 2,
                got: values.ncols(),
            });
        }
        let mut zero = Vec::new();
        for (j, col) in values.column_iter().enumerate() {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(RomaError::NonFinite { column: j });
            }
            if col.iter().all(|&v| v == 0.0) {
                zero.push(j);
            }
        }
        if !zero.is_empty() {
            return Err(RomaError::ZeroColumns(zero));
        }
        Ok(Self {
            values,
            labels: None,
            true_basis: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.num_points() {
            return Err(RomaError::Domain(format!(
                "{} labels for {} points",
                labels.len(),
                self.num_points()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Attaches the true subspace basis; columns must be orthonormal to 1e-10.
    pub fn with_true_basis(mut self, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != self.ambient_dim() {
            return Err(RomaError::Domain(format!(
                "basis has {} rows, data has dimension {}",
                basis.nrows(),
                self.ambient_dim()
            )));
        }
        let gram = basis.transpose() * &basis;
        let r = basis.ncols();
        let dev = (gram - DMatrix::<f64>::identity(r, r)).amax();
        if dev > 1e-10 {
            return Err(RomaError::Domain(format!(
                "true basis is not orthonormal (max Gram deviation {dev:.2e})"
            )));
        }
        self.true_basis = Some(basis);
        Ok(self)
    }

    pub fn ambient_dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_points(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn true_basis(&self) -> Option<&DMatrix<f64>> {
        self.true_basis.as_ref()
    }

    /// Indices labelled as true inliers / outliers, if labels are present.
    pub fn labelled(&self, which: Label) -> Option<Vec<usize>> {
        self.labels.as_ref().map(|l| {
            l.iter()
                .enumerate()
                .filter(|(_, &t)| t == which)
                .map(|(i, _)| i)
                .collect()
        })
    }

    /// Column subset in the given order, carrying labels and basis along.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        let values = self.values.select_columns(idx);
        let mut out = Self::new(values)?;
        if let Some(l) = &self.labels {
            out.labels = Some(idx.iter().map(|&i| l[i]).collect());
        }
        out.true_basis = self.true_basis.clone();
        Ok(out)
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

/// Data matrix whose columns all have unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct NormalizedMatrix {
    values: DMatrix<f64>,
}

impl NormalizedMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn ambient_dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_points(&self) -> usize {
        self.values.ncols()
    }

    /// Contiguous slice of column `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.values.nrows();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }
}

/// Divides every column by its Euclidean norm.
pub fn normalize_columns(m: &DataMatrix) -> Result<NormalizedMatrix> {
    normalize_values(m.values())
}

pub(crate) fn normalize_values(m: &DMatrix<f64>) -> Result<NormalizedMatrix> {
    let mut values = m.clone();
    let mut zero = Vec::new();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            zero.push(j);
            continue;
        }
        col /= norm;
    }
    if !zero.is_empty() {
        return Err(RomaError::ZeroColumns(zero));
    }
    Ok(NormalizedMatrix { values })
}

/// Disjoint inlier/outlier index sets covering `0..N`, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub inliers: Vec<usize>,
    pub outliers: Vec<usize>,
}

impl Partition {
    /// Builds a partition from a per-point outlier indicator.
    pub fn from_outlier_mask(mask: &[bool]) -> Self {
        let (outliers, inliers): (Vec<usize>, Vec<usize>) =
            (0..mask.len()).partition(|&i| mask[i]);
        Self { inliers, outliers }
    }

    pub fn num_points(&self) -> usize {
        self.inliers.len() + self.outliers.len()
    }

    pub fn outlier_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_points()];
        for &i in &self.outliers {
            mask[i] = true;
        }
        mask
    }

    /// True when the two sets are disjoint and cover `0..num_points`.
    pub fn is_valid(&self, num_points: usize) -> bool {
        if self.num_points() != num_points {
            return false;
        }
        let mut seen = vec![false; num_points];
        for &i in self.inliers.iter().chain(&self.outliers) {
            if i >= num_points || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }
}

/// Reads a comma-separated matrix file. See [`parse_csv_matrix`].
pub fn load_csv_matrix(path: impl AsRef<Path>, orientation: Orientation) -> Result<DataMatrix> {
    let file = std::fs::File::open(path)?;
    parse_csv_matrix(file, orientation)
}

/// Parses a numeric CSV matrix.
///
/// A single leading header row is skipped when any of its fields fails to
/// parse as a number. Rows are reported 1-based as they appear in the file.
pub fn parse_csv_matrix<R: Read>(reader: R, orientation: Orientation) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let row = k + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if k == 0 && parsed.iter().any(Option::is_none) {
            continue; // header
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(RomaError::Parse {
                    row,
                    column: None,
                    message: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        let mut values = Vec::with_capacity(record.len());
        for (c, (field, v)) in record.iter().zip(parsed).enumerate() {
            match v {
                Some(x) if x.is_finite() => values.push(x),
                _ => {
                    return Err(RomaError::Parse {
                        row,
                        column: Some(c + 1),
                        message: format!("'{field}' is not a finite number"),
                    })
                }
            }
        }
        rows.push(values);
    }

    let width = width.ok_or_else(|| RomaError::Parse {
        row: 0,
        column: None,
        message: "no numeric rows".into(),
    })?;
    let height = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let values = match orientation {
        Orientation::PointsAsRows => DMatrix::from_row_slice(height, width, &flat).transpose(),
        Orientation::PointsAsColumns => DMatrix::from_row_slice(height, width, &flat),
    };
    DataMatrix::new(values)
}

/// Writes the matrix as CSV in the requested orientation, full round-trip precision.
pub fn write_csv_matrix<W: Write>(
    m: &DMatrix<f64>,
    orientation: Orientation,
    writer: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let table = match orientation {
        Orientation::PointsAsRows => m.transpose(),
        Orientation::PointsAsColumns => m.clone(),
    };
    for row in table.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}
