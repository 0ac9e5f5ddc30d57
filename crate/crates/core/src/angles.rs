//! Pairwise angles between normalized data points and the per-point scores
//! derived from them.
//!
//! Two routes produce identical scores: a materialized `N x N` [`AngleTable`],
//! and a streamed pass over the upper triangle that never stores the table.
//! [`AngleEngine`] picks between them with a size cap. Both evaluate inner
//! products with the same kernel, so `<x_i, x_j>` is bitwise equal to
//! `<x_j, x_i>` and the tables are exactly symmetric.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::NormalizedMatrix;
use crate::error::{Result, RomaError};

/// Inner product with a fixed summation order. Symmetric in its arguments.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn acute(g: f64) -> f64 {
    g.abs().min(1.0).acos()
}

#[inline]
fn principal(g: f64) -> f64 {
    g.clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleKind {
    /// `arccos |<x_i, x_j>|`, in `[0, pi/2]`.
    Acute,
    /// `arccos <x_i, x_j>`, in `[0, pi]`.
    Principal,
}

/// Dense symmetric table of pairwise angles with a zero diagonal.
#[derive(Debug, Clone)]
pub struct AngleTable {
    kind: AngleKind,
    size: usize,
    values: Vec<f64>,
}

impl AngleTable {
    pub fn kind(&self) -> AngleKind {
        self.kind
    }

    pub fn num_points(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    fn build(x: &NormalizedMatrix, kind: AngleKind) -> Self {
        let size = x.num_points();
        let mut values = vec![0.0; size * size];
        let f = match kind {
            AngleKind::Acute => acute,
            AngleKind::Principal => principal,
        };
        values
            .par_chunks_mut(size.max(1))
            .enumerate()
            .for_each(|(i, row)| {
                let xi = x.column(i);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 0.0 } else { f(dot(xi, x.column(j))) };
                }
            });
        Self { kind, size, values }
    }
}

/// Table of acute angles `phi_ij`.
pub fn pairwise_acute_angles(x: &NormalizedMatrix) -> AngleTable {
    AngleTable::build(x, AngleKind::Acute)
}

/// Table of principal angles `theta_ij`.
pub fn pairwise_principal_angles(x: &NormalizedMatrix) -> AngleTable {
    AngleTable::build(x, AngleKind::Principal)
}

fn need_two(n: usize) -> Result<()> {
    if n < 2 {
        return Err(RomaError::TooFewPoints {
            required: 2,
            got: n,
        });
    }
    Ok(())
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta > 0.0 && zeta < FRAC_PI_2) {
        return Err(RomaError::Domain(format!(
            "threshold must lie in (0, pi/2), got {zeta}"
        )));
    }
    Ok(())
}

/// Minimum acute angle each point forms with any other point.
pub fn min_angle_scores(phi: &AngleTable) -> Result<Vec<f64>> {
    need_two(phi.num_points())?;
    Ok((0..phi.num_points())
        .map(|i| {
            phi.row(i)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Number of acute angles per point strictly greater than `zeta`.
pub fn count_above_threshold(phi: &AngleTable, zeta: f64) -> Result<Vec<usize>> {
    check_zeta(zeta)?;
    Ok((0..phi.num_points())
        .map(|i| phi.row(i).iter().filter(|&&v| v > zeta).count())
        .collect())
}

/// Mean principal angle over unordered pairs `i < j`.
pub fn mean_principal_angle(theta: &AngleTable) -> Result<f64> {
    let n = theta.num_points();
    need_two(n)?;
    let row_sums: Vec<f64> = (0..n)
        .map(|i| theta.row(i)[i + 1..].iter().sum())
        .collect();
    Ok(pairwise_sum(&row_sums) / (n * (n - 1) / 2) as f64)
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Per-point scores used by the detectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleScores {
    /// Minimum acute angle `q_i` of each point.
    pub q: Vec<f64>,
    /// Count of acute angles above `zeta_used`, over all `N` points.
    pub na: Vec<usize>,
    /// Mean principal angle over all unordered pairs, when it was computed.
    pub mean_theta: Option<f64>,
    pub zeta_used: f64,
}

/// Row-wise reductions over the pairs inside a subset of points.
///
/// Positions refer to the order of the subset that was passed in.
#[derive(Debug, Clone)]
pub(crate) struct SubsetStats {
    pub min_phi: Vec<f64>,
    pub partner: Vec<usize>,
    pub above: Vec<usize>,
}

/// Computes angle-derived scores, materializing the table only for small inputs.
#[derive(Debug, Clone, Copy)]
pub struct AngleEngine {
    table_cap: usize,
}

impl Default for AngleEngine {
    fn default() -> Self {
        Self { table_cap: 256 }
    }
}

impl AngleEngine {
    /// Largest `N` for which the full table is stored. `0` always streams.
    pub fn with_table_cap(table_cap: usize) -> Self {
        Self { table_cap }
    }

    pub fn table_cap(&self) -> usize {
        self.table_cap
    }

    fn materialize(&self, n: usize) -> bool {
        n <= self.table_cap
    }

    /// Mean principal angle over all pairs.
    pub fn mean_principal(&self, x: &NormalizedMatrix) -> Result<f64> {
        let n = x.num_points();
        need_two(n)?;
        if self.materialize(n) {
            return mean_principal_angle(&pairwise_principal_angles(x));
        }
        let row_sums: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = x.column(i);
                ((i + 1)..n).map(|j| principal(dot(xi, x.column(j)))).sum()
            })
            .collect();
        Ok(pairwise_sum(&row_sums) / (n * (n - 1) / 2) as f64)
    }

    /// `q_i` and the all-points `na_i` for every point.
    pub fn scores(
        &self,
        x: &NormalizedMatrix,
        zeta: f64,
        mean_theta: Option<f64>,
    ) -> Result<AngleScores> {
        self.prepare(x).scores(zeta, mean_theta)
    }

    /// Builds the table when `N` is within the cap; otherwise defers to streaming.
    pub fn prepare<'a>(&self, x: &'a NormalizedMatrix) -> AngleSource<'a> {
        let table = self
            .materialize(x.num_points())
            .then(|| pairwise_acute_angles(x));
        AngleSource { x, table }
    }
}

/// Acute angles of one data set, either stored or computed on demand.
#[derive(Debug)]
pub struct AngleSource<'a> {
    x: &'a NormalizedMatrix,
    table: Option<AngleTable>,
}

impl AngleSource<'_> {
    pub fn is_materialized(&self) -> bool {
        self.table.is_some()
    }

    pub fn scores(&self, zeta: f64, mean_theta: Option<f64>) -> Result<AngleScores> {
        need_two(self.x.num_points())?;
        check_zeta(zeta)?;
        let all: Vec<usize> = (0..self.x.num_points()).collect();
        let stats = self.subset_stats(&all, zeta);
        Ok(AngleScores {
            q: stats.min_phi,
            na: stats.above,
            mean_theta,
            zeta_used: zeta,
        })
    }

    pub(crate) fn subset_stats(&self, subset: &[usize], zeta: f64) -> SubsetStats {
        match &self.table {
            Some(t) => table_stats(t, subset, zeta),
            None => streamed_stats(self.x, subset, zeta),
        }
    }

    /// Acute angles from point `i` to each point of `subset`.
    pub(crate) fn acute_row(&self, i: usize, subset: &[usize]) -> Vec<f64> {
        match &self.table {
            Some(t) => subset.iter().map(|&j| t.get(i, j)).collect(),
            None => {
                let xi = self.x.column(i);
                subset
                    .iter()
                    .map(|&j| if j == i { 0.0 } else { acute(dot(xi, self.x.column(j))) })
                    .collect()
            }
        }
    }
}

fn table_stats(phi: &AngleTable, subset: &[usize], zeta: f64) -> SubsetStats {
    let m = subset.len();
    let mut min_phi = vec![f64::INFINITY; m];
    let mut partner = vec![usize::MAX; m];
    let mut above = vec![0usize; m];
    for (a, &i) in subset.iter().enumerate() {
        let row = phi.row(i);
        for (b, &j) in subset.iter().enumerate() {
            if a == b {
                continue;
            }
            let v = row[j];
            // b ascends, so the first minimum keeps the smallest partner
            if v < min_phi[a] {
                min_phi[a] = v;
                partner[a] = b;
            }
            if v > zeta {
                above[a] += 1;
            }
        }
    }
    SubsetStats {
        min_phi,
        partner,
        above,
    }
}

struct Partial {
    max_abs: Vec<f64>,
    partner: Vec<usize>,
    above: Vec<usize>,
}

impl Partial {
    fn new(m: usize) -> Self {
        Self {
            max_abs: vec![-1.0; m],
            partner: vec![usize::MAX; m],
            above: vec![0; m],
        }
    }

    #[inline]
    fn offer(&mut self, a: usize, b: usize, g: f64) {
        if g > self.max_abs[a] || (g == self.max_abs[a] && b < self.partner[a]) {
            self.max_abs[a] = g;
            self.partner[a] = b;
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        for a in 0..self.max_abs.len() {
            let (g, b) = (other.max_abs[a], other.partner[a]);
            if g > self.max_abs[a] || (g == self.max_abs[a] && b < self.partner[a]) {
                self.max_abs[a] = g;
                self.partner[a] = b;
            }
            self.above[a] += other.above[a];
        }
        self
    }
}

// Largest |g| whose angle is decided without evaluating arccos.
const BAND: f64 = 1e-12;

fn streamed_stats(x: &NormalizedMatrix, subset: &[usize], zeta: f64) -> SubsetStats {
    let m = subset.len();
    let c = zeta.cos();
    let partial = (0..m)
        .into_par_iter()
        .fold(
            || Partial::new(m),
            |mut acc, a| {
                let xi = x.column(subset[a]);
                for b in (a + 1)..m {
                    let g = dot(xi, x.column(subset[b])).abs().min(1.0);
                    acc.offer(a, b, g);
                    acc.offer(b, a, g);
                    let is_above = if g < c - BAND {
                        true
                    } else if g > c + BAND {
                        false
                    } else {
                        g.acos() > zeta
                    };
                    if is_above {
                        acc.above[a] += 1;
                        acc.above[b] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| Partial::new(m), Partial::merge);
    SubsetStats {
        min_phi: partial.max_abs.iter().map(|g| g.acos()).collect(),
        partner: partial.partner,
        above: partial.above,
    }
}
