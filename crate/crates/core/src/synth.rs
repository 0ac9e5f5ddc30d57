//! Seeded synthetic data: random subspaces, unstructured and clustered
//! outliers, clustered inliers, bounded-cone point sets and calibrated noise.
//!
//! Every generator takes an explicit RNG. [`SynthSpec::generate`] derives one
//! ChaCha8 stream per component (basis, inliers, outliers, permutation, noise)
//! from its seed, so the same `SynthSpec` always yields the same dataset.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv_matrix, write_csv_matrix, DataMatrix, Label, Orientation};
use crate::error::{Result, RomaError};

/// Generator used throughout the crate.
pub type SynthRng = ChaCha8Rng;

/// Stream ids for [`stream_rng`].
pub mod streams {
    pub const BASIS: u64 = 1;
    pub const INLIERS: u64 = 2;
    pub const OUTLIERS: u64 = 3;
    pub const PERMUTATION: u64 = 4;
    pub const NOISE: u64 = 5;
}

/// Independent generator for one component of a seeded computation.
pub fn stream_rng(seed: u64, stream: u64) -> SynthRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; spreads structured inputs over 64 bits.
pub fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutlierModel {
    /// Uniform on the sphere.
    Unstructured,
    /// `a + mu b_i`, normalized. `literal` uses `a + b_i` instead.
    Clustered {
        mu: f64,
        #[serde(default)]
        literal: bool,
    },
    /// Pairwise principal angles confined to `[theta_min, theta_max]`.
    BoundedCone { theta_min: f64, theta_max: f64 },
    /// Each outlier is clustered with probability `structured_fraction`,
    /// unstructured otherwise.
    Mixed { mu: f64, structured_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InlierModel {
    /// Uniform on the unit sphere of the subspace.
    Uniform,
    /// `u + nu v_i` inside the subspace, normalized.
    Clustered {
        nu: f64,
        #[serde(default)]
        literal: bool,
    },
}

/// Which columns receive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseTarget {
    #[default]
    InliersOnly,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub num_points: usize,
    pub r: usize,
    /// Outlier fraction; the outlier count is `round(gamma N)`.
    pub gamma: f64,
    pub outlier_model: OutlierModel,
    pub inlier_model: InlierModel,
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub noise_target: NoiseTarget,
    pub seed: u64,
}

impl SynthSpec {
    /// Uniform inliers, unstructured outliers, no noise.
    pub fn new(n: usize, r: usize, num_points: usize, gamma: f64, seed: u64) -> Self {
        Self {
            n,
            num_points,
            r,
            gamma,
            outlier_model: OutlierModel::Unstructured,
            inlier_model: InlierModel::Uniform,
            snr_db: None,
            noise_target: NoiseTarget::InliersOnly,
            seed,
        }
    }

    /// Spec with exactly `n_inliers` inliers and `n_outliers` outliers.
    pub fn with_counts(n: usize, r: usize, n_inliers: usize, n_outliers: usize, seed: u64) -> Self {
        let total = n_inliers + n_outliers;
        Self::new(n, r, total, n_outliers as f64 / total.max(1) as f64, seed)
    }

    pub fn outliers(mut self, model: OutlierModel) -> Self {
        self.outlier_model = model;
        self
    }

    pub fn inliers(mut self, model: InlierModel) -> Self {
        self.inlier_model = model;
        self
    }

    pub fn snr_db(mut self, snr_db: Option<f64>) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn noise_target(mut self, target: NoiseTarget) -> Self {
        self.noise_target = target;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn num_outliers(&self) -> usize {
        (self.gamma * self.num_points as f64).round() as usize
    }

    pub fn num_inliers(&self) -> usize {
        self.num_points - self.num_outliers()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RomaError::Config(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if self.r == 0 || self.r > self.n {
            return bad(format!("need 1 <= r <= n, got r={}, n={}", self.r, self.n));
        }
        if self.num_outliers() >= self.num_points {
            return bad(format!(
                "gamma={} leaves no inliers among N={}",
                self.gamma, self.num_points
            ));
        }
        match self.outlier_model {
            OutlierModel::Clustered { mu, .. } if !(mu > 0.0) => {
                return bad(format!("mu must be positive, got {mu}"));
            }
            OutlierModel::Mixed { mu, structured_fraction } => {
                if !(mu > 0.0) {
                    return bad(format!("mu must be positive, got {mu}"));
                }
                if !(0.0..=1.0).contains(&structured_fraction) {
                    return bad(format!(
                        "structured_fraction must lie in [0, 1], got {structured_fraction}"
                    ));
                }
            }
            OutlierModel::BoundedCone { theta_min, theta_max } => {
                check_cone(theta_min, theta_max)?;
            }
            _ => {}
        }
        if let InlierModel::Clustered { nu, .. } = self.inlier_model {
            if !(nu > 0.0) {
                return bad(format!("nu must be positive, got {nu}"));
            }
        }
        if let Some(db) = self.snr_db {
            if db.is_nan() {
                return bad("snr_db is NaN".into());
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<SynthDataset> {
        self.validate()?;
        let (n, r, seed) = (self.n, self.r, self.seed);
        let basis = random_subspace(n, r, &mut stream_rng(seed, streams::BASIS))?;

        let n_in = self.num_inliers();
        let n_out = self.num_outliers();
        let mut in_rng = stream_rng(seed, streams::INLIERS);
        let inliers = match self.inlier_model {
            InlierModel::Uniform => sample_in_subspace(&basis, n_in, &mut in_rng),
            InlierModel::Clustered { nu, literal } => {
                clustered_inliers(&basis, n_in, nu, literal, &mut in_rng)?
            }
        };

        let mut out_rng = stream_rng(seed, streams::OUTLIERS);
        let outliers = match self.outlier_model {
            OutlierModel::Unstructured => sample_sphere(n, n_out, &mut out_rng),
            OutlierModel::Clustered { mu, literal } => {
                clustered_outliers(n, n_out, mu, literal, &mut out_rng)?
            }
            OutlierModel::BoundedCone { theta_min, theta_max } => {
                bounded_cone(n, n_out, theta_min, theta_max, &mut out_rng, None)?
            }
            OutlierModel::Mixed { mu, structured_fraction } => {
                let structured: Vec<bool> = (0..n_out)
                    .map(|_| out_rng.random::<f64>() < structured_fraction)
                    .collect();
                let k = structured.iter().filter(|&&s| s).count();
                let clustered = clustered_outliers(n, k, mu, false, &mut out_rng)?;
                let random = sample_sphere(n, n_out - k, &mut out_rng);
                let (mut a, mut b) = (0, 0);
                let mut m = DMatrix::zeros(n, n_out);
                for (j, &s) in structured.iter().enumerate() {
                    if s {
                        m.set_column(j, &clustered.column(a));
                        a += 1;
                    } else {
                        m.set_column(j, &random.column(b));
                        b += 1;
                    }
                }
                m
            }
        };

        let mut order: Vec<usize> = (0..self.num_points).collect();
        order.shuffle(&mut stream_rng(seed, streams::PERMUTATION));
        let mut values = DMatrix::zeros(n, self.num_points);
        let mut labels = Vec::with_capacity(self.num_points);
        for (dst, &src) in order.iter().enumerate() {
            if src < n_in {
                values.set_column(dst, &inliers.column(src));
                labels.push(Label::Inlier);
            } else {
                values.set_column(dst, &outliers.column(src - n_in));
                labels.push(Label::Outlier);
            }
        }
        let matrix = DataMatrix::new(values)?
            .with_labels(labels)?
            .with_true_basis(basis)?;
        let data = SynthDataset {
            matrix,
            spec: *self,
            noise: None,
        };
        match self.snr_db {
            Some(db) => Ok(add_noise_snr(
                data,
                db,
                &mut stream_rng(seed, streams::NOISE),
                self.noise_target,
            )),
            None => Ok(data),
        }
    }
}

/// Noise that was added to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub snr_db: f64,
    pub sigma: f64,
    pub target: NoiseTarget,
    /// `||m_i||^2 / (n sigma^2)` for each clean column.
    pub point_snr: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub matrix: DataMatrix,
    pub spec: SynthSpec,
    pub noise: Option<NoiseInfo>,
}

impl SynthDataset {
    pub fn labels(&self) -> &[Label] {
        self.matrix.labels().expect("synthetic data is labelled")
    }

    pub fn true_basis(&self) -> &DMatrix<f64> {
        self.matrix.true_basis().expect("synthetic data has a basis")
    }

    pub fn inlier_indices(&self) -> Vec<usize> {
        self.matrix.labelled(Label::Inlier).unwrap_or_default()
    }

    pub fn outlier_indices(&self) -> Vec<usize> {
        self.matrix.labelled(Label::Outlier).unwrap_or_default()
    }

    /// Writes the matrix as CSV and the ground truth next to it, see [`sidecar_path`].
    pub fn export(&self, csv_path: impl AsRef<Path>, orientation: Orientation) -> Result<()> {
        let csv_path = csv_path.as_ref();
        let file = std::fs::File::create(csv_path)?;
        write_csv_matrix(self.matrix.values(), orientation, std::io::BufWriter::new(file))?;
        let basis = self.true_basis();
        let sidecar = Sidecar {
            spec: Some(self.spec),
            seed: Some(self.spec.seed),
            orientation,
            labels: self.labels().to_vec(),
            true_basis: Some(
                basis
                    .column_iter()
                    .map(|c| c.iter().copied().collect())
                    .collect(),
            ),
            noise: self.noise.clone(),
        };
        let file = std::fs::File::create(sidecar_path(csv_path))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &sidecar)?;
        Ok(())
    }
}

/// Ground truth stored next to an exported matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: Option<SynthSpec>,
    pub seed: Option<u64>,
    pub orientation: Orientation,
    pub labels: Vec<Label>,
    /// Basis columns.
    pub true_basis: Option<Vec<Vec<f64>>>,
    pub noise: Option<NoiseInfo>,
}

/// `data.csv` maps to `data.json`.
pub fn sidecar_path(csv_path: impl AsRef<Path>) -> PathBuf {
    csv_path.as_ref().with_extension("json")
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Sidecar> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Loads an exported matrix with its labels and basis attached.
pub fn load_labelled(csv_path: impl AsRef<Path>) -> Result<(DataMatrix, Sidecar)> {
    let csv_path = csv_path.as_ref();
    let sidecar = read_sidecar(sidecar_path(csv_path))?;
    let mut m = load_csv_matrix(csv_path, sidecar.orientation)?.with_labels(sidecar.labels.clone())?;
    if let Some(cols) = &sidecar.true_basis {
        let n = m.ambient_dim();
        if cols.iter().any(|c| c.len() != n) {
            return Err(RomaError::Config(format!(
                "sidecar basis columns must have length {n}"
            )));
        }
        let flat: Vec<f64> = cols.iter().flatten().copied().collect();
        m = m.with_true_basis(DMatrix::from_column_slice(n, cols.len(), &flat))?;
    }
    Ok((m, sidecar))
}

fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

// Gaussian draws have nonzero norm with probability one; retry the measure-zero case.
fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = gaussian_vector(d, rng);
        let norm = g.norm();
        if norm > 0.0 {
            return g / norm;
        }
    }
}

fn normalized(v: DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    v / norm
}

/// `count` independent uniform points on the unit sphere of `R^d`, as columns.
pub fn sample_sphere<R: Rng + ?Sized>(d: usize, count: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, count);
    for j in 0..count {
        m.set_column(j, &unit_vector(d, rng));
    }
    m
}

/// Uniform points on the unit sphere of `span(basis)`.
pub fn sample_in_subspace<R: Rng + ?Sized>(basis: &DMatrix<f64>, count: usize, rng: &mut R) -> DMatrix<f64> {
    basis * sample_sphere(basis.ncols(), count, rng)
}

/// Orthonormal basis of a uniformly random `r`-dimensional subspace of `R^n`.
pub fn random_subspace<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if r == 0 || r > n {
        return Err(RomaError::Domain(format!(
            "subspace dimension must satisfy 1 <= r <= n, got r={r}, n={n}"
        )));
    }
    let g = DMatrix::from_fn(n, r, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    for (j, d) in rdiag.iter().enumerate() {
        if *d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Points `a + mu b_i`, normalized, with one shared centre `a` per call.
pub fn sample_clustered_outliers<R: Rng + ?Sized>(n: usize, count: usize, mu: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    clustered_outliers(n, count, mu, false, rng)
}

/// [`sample_clustered_outliers`] with the unscaled form `a + b_i`.
pub fn sample_clustered_outliers_literal<R: Rng + ?Sized>(n: usize, count: usize, mu: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    clustered_outliers(n, count, mu, true, rng)
}

fn clustered_outliers<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    mu: f64,
    literal: bool,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if !(mu > 0.0) {
        return Err(RomaError::Domain(format!("mu must be positive, got {mu}")));
    }
    let a = unit_vector(n, rng);
    let scale = if literal { 1.0 } else { mu };
    let mut m = DMatrix::zeros(n, count);
    for j in 0..count {
        let b = unit_vector(n, rng);
        m.set_column(j, &cluster_point(&a, &b, scale, mu));
    }
    Ok(m)
}

// (a + s b) / sqrt(1 + mu^2), then renormalized onto the sphere.
fn cluster_point(a: &DVector<f64>, b: &DVector<f64>, s: f64, mu: f64) -> DVector<f64> {
    let x = (a + b * s) / (1.0 + mu * mu).sqrt();
    if x.norm() > 0.0 {
        normalized(x)
    } else {
        a.clone()
    }
}

/// Points `u + nu v_i` with `u`, `v_i` uniform in `span(basis)`, normalized.
pub fn sample_clustered_inliers<R: Rng + ?Sized>(
    basis: &DMatrix<f64>,
    count: usize,
    nu: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    clustered_inliers(basis, count, nu, false, rng)
}

fn clustered_inliers<R: Rng + ?Sized>(
    basis: &DMatrix<f64>,
    count: usize,
    nu: f64,
    literal: bool,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if !(nu > 0.0) {
        return Err(RomaError::Domain(format!("nu must be positive, got {nu}")));
    }
    let coords = clustered_outliers(basis.ncols(), count, nu, literal, rng)?;
    Ok(basis * coords)
}

fn check_cone(theta_min: f64, theta_max: f64) -> Result<()> {
    if !(theta_max > 0.0 && theta_max < std::f64::consts::FRAC_PI_2) {
        return Err(RomaError::Domain(format!(
            "theta_max must lie in (0, pi/2), got {theta_max}"
        )));
    }
    if !(0.0..=theta_max).contains(&theta_min) {
        return Err(RomaError::Domain(format!(
            "theta_min must lie in [0, theta_max], got {theta_min}"
        )));
    }
    Ok(())
}

/// Draws per requested point before the cone sampler gives up.
pub const CONE_DRAWS_PER_POINT: usize = 1000;

/// `count` unit points whose pairwise principal angles are all at most `theta_max`.
///
/// With `subspace`, points are drawn on the sphere of its span. See
/// [`sample_bounded_cone_range`].
pub fn sample_bounded_cone<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    theta_max: f64,
    rng: &mut R,
    subspace: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    bounded_cone(n, count, 0.0, theta_max, rng, subspace)
}

/// Rejection sampler for a point set with pairwise principal angles in
/// `[theta_min, theta_max]`.
///
/// The first point is uniform. Candidates lie at a uniform angle in
/// `[0, theta_max]` from it, in a uniform direction, and are kept when they
/// satisfy the angle range against every kept point. After
/// [`CONE_DRAWS_PER_POINT`]` * count` candidates the sampler fails with the
/// observed acceptance rate.
pub fn sample_bounded_cone_range<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    theta_min: f64,
    theta_max: f64,
    rng: &mut R,
    subspace: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    bounded_cone(n, count, theta_min, theta_max, rng, subspace)
}

fn bounded_cone<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    theta_min: f64,
    theta_max: f64,
    rng: &mut R,
    subspace: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    check_cone(theta_min, theta_max)?;
    let d = match subspace {
        Some(u) => {
            if u.nrows() != n {
                return Err(RomaError::Domain(format!(
                    "subspace basis has {} rows, expected {n}",
                    u.nrows()
                )));
            }
            u.ncols()
        }
        None => n,
    };
    if count == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let budget = CONE_DRAWS_PER_POINT * count;
    let centre = unit_vector(d, rng);
    let mut kept: Vec<DVector<f64>> = vec![centre.clone()];
    let mut draws = 1;
    while kept.len() < count && draws < budget {
        draws += 1;
        let mut w = gaussian_vector(d, rng);
        w -= &centre * centre.dot(&w);
        let t = theta_max * rng.random::<f64>();
        let x = match w.norm() {
            norm if norm > 0.0 => normalized(&centre * t.cos() + w * (t.sin() / norm)),
            _ => centre.clone(),
        };
        let fits = kept.iter().all(|y| {
            let theta = x.dot(y).clamp(-1.0, 1.0).acos();
            theta >= theta_min && theta <= theta_max
        });
        if fits {
            kept.push(x);
        }
    }
    if kept.len() < count {
        return Err(RomaError::Infeasible {
            accepted: kept.len(),
            requested: count,
            draws,
            acceptance_rate: kept.len() as f64 / draws as f64,
        });
    }
    let coords = DMatrix::from_columns(&kept);
    Ok(match subspace {
        Some(u) => u * coords,
        None => coords,
    })
}

/// Adds i.i.d. `N(0, sigma^2)` entries with `sigma = ||M||_F / (10^(db/20) sqrt(n N))`.
///
/// `M` is the whole clean matrix. An infinite `snr_db` leaves the data unchanged.
pub fn add_noise_snr<R: Rng + ?Sized>(
    mut data: SynthDataset,
    snr_db: f64,
    rng: &mut R,
    target: NoiseTarget,
) -> SynthDataset {
    let values = data.matrix.values();
    let (n, big_n) = (values.nrows(), values.ncols());
    let sigma = values.norm() / (10f64.powf(snr_db / 20.0) * ((n * big_n) as f64).sqrt());
    let point_snr = values
        .column_iter()
        .map(|c| c.norm_squared() / (n as f64 * sigma * sigma))
        .collect();
    let info = NoiseInfo {
        snr_db,
        sigma,
        target,
        point_snr,
    };
    if sigma > 0.0 {
        let labels = data.matrix.labels().map(<[Label]>::to_vec);
        let basis = data.matrix.true_basis().cloned();
        let mut noisy = data.matrix.values().clone();
        for (j, mut col) in noisy.column_iter_mut().enumerate() {
            let hit = match target {
                NoiseTarget::All => true,
                NoiseTarget::InliersOnly => labels
                    .as_ref()
                    .is_none_or(|l| l[j] == Label::Inlier),
            };
            if hit {
                for v in col.iter_mut() {
                    *v += sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        // noise cannot produce a zero or non-finite column except with probability zero
        let mut m = DataMatrix::new(noisy).expect("noisy data stays valid");
        if let Some(l) = labels {
            m = m.with_labels(l).expect("label count unchanged");
        }
        if let Some(b) = basis {
            m = m.with_true_basis(b).expect("basis unchanged");
        }
        data.matrix = m;
    }
    data.noise = Some(info);
    data
}
