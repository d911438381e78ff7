//! Reference data: the point-cloud-in-circle and entangled-half-circles
//! generators, CSV ingestion with per-column normalization, and PCA
//! projection for 2-D reporting.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};

/// How the second parameter of `N(a, b)` in the generator recipes is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalConvention {
    #[default]
    Variance,
    StdDev,
}

impl NormalConvention {
    pub fn std_dev(self, b: f64) -> f64 {
        match self {
            NormalConvention::Variance => b.sqrt(),
            NormalConvention::StdDev => b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `m` points from `N(0, I)` inside `2m` points on a noisy ring.
    PointInCircle,
    /// Two interleaved noisy sine arcs with `m` points each.
    HalfCircles,
}

/// A labelled two-cluster generative model in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub kind: SyntheticKind,
    #[serde(default)]
    pub convention: NormalConvention,
}

const RING_RADIUS_MEAN: f64 = 2.5;
const RING_RADIUS_SPREAD: f64 = 0.25;
const ARC_NOISE_SPREAD: f64 = 0.2;

impl SyntheticModel {
    pub fn new(kind: SyntheticKind) -> Self {
        Self {
            kind,
            convention: NormalConvention::default(),
        }
    }

    pub fn labels(&self) -> [u32; 2] {
        [1, 2]
    }

    /// Points per cluster for size parameter `m`.
    pub fn cluster_sizes(&self, m: usize) -> [usize; 2] {
        match self.kind {
            SyntheticKind::PointInCircle => [m, 2 * m],
            SyntheticKind::HalfCircles => [m, m],
        }
    }

    /// One fresh draw from the distribution of cluster `label`.
    pub fn sample_point<R: Rng + ?Sized>(&self, label: u32, rng: &mut R) -> Result<[f64; 2]> {
        match (self.kind, label) {
            (SyntheticKind::PointInCircle, 1) => {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                Ok([x, y])
            }
            (SyntheticKind::PointInCircle, 2) => {
                let sd = self.convention.std_dev(RING_RADIUS_SPREAD);
                let r = RING_RADIUS_MEAN + sd * rng.sample::<f64, _>(StandardNormal);
                let phi = rng.random_range(0.0..2.0 * PI);
                Ok([r * phi.cos(), r * phi.sin()])
            }
            (SyntheticKind::HalfCircles, 1 | 2) => {
                let x = if label == 1 {
                    rng.random_range(0.0..PI)
                } else {
                    rng.random_range(0.4 * PI..1.4 * PI)
                };
                let noise = Normal::new(0.0, self.convention.std_dev(ARC_NOISE_SPREAD))
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                let z = noise.sample(rng);
                Ok([x, half_circle_y(label, x, z)])
            }
            _ => Err(Error::InvalidInput(format!(
                "generator {:?} has no cluster labelled {label}",
                self.kind
            ))),
        }
    }

    /// Cluster 1 first, then cluster 2, each drawn point by point.
    pub fn generate<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<DataSet> {
        if m == 0 {
            return Err(Error::InvalidInput("cluster size parameter m must be >= 1".into()));
        }
        let sizes = self.cluster_sizes(m);
        let n = sizes.iter().sum();
        let mut coords = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(n);
        for (label, size) in self.labels().into_iter().zip(sizes) {
            for _ in 0..size {
                coords.extend_from_slice(&self.sample_point(label, rng)?);
                labels.push(label);
            }
        }
        DataSet::from_flat(2, coords, Some(labels))
    }
}

/// Height of arc `label` at abscissa `x` with noise `z`:
/// `0.1 - 1.3 sin(x) + z` for cluster 1 and `1.3 sin(x - 0.4 pi) + z` for cluster 2.
pub fn half_circle_y(label: u32, x: f64, z: f64) -> f64 {
    if label == 1 {
        0.1 - 1.3 * x.sin() + z
    } else {
        1.3 * (x - 0.4 * PI).sin() + z
    }
}

pub fn gen_point_in_circle<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<DataSet> {
    SyntheticModel::new(SyntheticKind::PointInCircle).generate(m, rng)
}

pub fn gen_half_circles<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<DataSet> {
    SyntheticModel::new(SyntheticKind::HalfCircles).generate(m, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Zscore,
    Minmax,
    None,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub normalization: Normalization,
    /// `None` detects a header from a non-numeric first row.
    pub has_header: Option<bool>,
    /// Treat the last column as an integer cluster label.
    pub label_column: bool,
}

/// Reads a rectangular numeric CSV and normalizes each coordinate column.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<DataSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options)
}

pub fn read_csv<R: std::io::Read>(reader: R, options: &CsvOptions) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: i + 1,
            column: 0,
            message: e.to_string(),
        })?;
        rows.push(rec);
    }
    let header = match options.has_header {
        Some(h) => h,
        None => rows
            .first()
            .is_some_and(|r| r.iter().any(|c| c.parse::<f64>().is_err())),
    };
    let skip = usize::from(header);
    let width = rows.get(skip).map(|r| r.len()).unwrap_or(0);
    let dim = width.saturating_sub(usize::from(options.label_column));
    if rows.len() <= skip || dim == 0 {
        return Err(Error::InvalidInput("CSV contains no numeric coordinate columns".into()));
    }
    let mut coords = Vec::with_capacity((rows.len() - skip) * dim);
    let mut labels = Vec::new();
    for (r, rec) in rows.iter().enumerate().skip(skip) {
        for (c, cell) in rec.iter().enumerate() {
            let parse_err = |message: String| Error::Parse {
                row: r + 1,
                column: c + 1,
                message,
            };
            if c < dim {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(format!("{cell:?} is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("{cell:?} is not finite")));
                }
                coords.push(v);
            } else {
                labels.push(
                    cell.parse::<u32>()
                        .map_err(|_| parse_err(format!("label {cell:?} is not a nonnegative integer")))?,
                );
            }
        }
    }
    let labels = options.label_column.then_some(labels);
    normalize(&DataSet::from_flat(dim, coords, labels)?, options.normalization)
}

/// Per-column normalization. `zscore` uses the population standard deviation.
pub fn normalize(x: &DataSet, mode: Normalization) -> Result<DataSet> {
    let (n, d) = (x.len(), x.dim());
    let mut coords = x.coords().to_vec();
    if mode == Normalization::None {
        return Ok(x.clone());
    }
    for c in 0..d {
        let col = (0..n).map(|i| coords[i * d + c]);
        let (shift, scale) = match mode {
            Normalization::Zscore => {
                let mean = col.clone().sum::<f64>() / n as f64;
                let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            }
            Normalization::Minmax => {
                let lo = col.clone().fold(f64::INFINITY, f64::min);
                let hi = col.fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
            Normalization::None => unreachable!(),
        };
        if !(scale > 0.0) {
            return Err(Error::DegenerateColumn { column: c });
        }
        for i in 0..n {
            coords[i * d + c] = (coords[i * d + c] - shift) / scale;
        }
    }
    DataSet::from_flat(d, coords, x.labels().map(<[u32]>::to_vec))
}

/// Eigenvalues below this fraction of the largest make a component degenerate.
pub const PCA_DEGENERACY: f64 = 1e-12;

/// Projects centered data onto the `k` leading principal axes. Each axis is
/// oriented so its largest-magnitude loading is positive.
pub fn pca_project(x: &DataSet, k: usize) -> Result<DataSet> {
    let (n, d) = (x.len(), x.dim());
    if n < 2 {
        return Err(Error::InvalidInput("PCA needs at least two points".into()));
    }
    if k == 0 || d < k {
        return Err(Error::InvalidInput(format!(
            "cannot project {d}-dimensional data onto {k} components"
        )));
    }
    let mut centered = DMatrix::from_row_slice(n, d, x.coords());
    for c in 0..d {
        let mean = centered.column(c).mean();
        centered.column_mut(c).add_scalar_mut(-mean);
    }
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::try_new(cov, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("PCA eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    if let Some(c) = (0..k).find(|&c| !(eig.eigenvalues[order[c]] > PCA_DEGENERACY * largest) || !(largest > 0.0)) {
        return Err(Error::DegenerateData(format!(
            "principal component {} has (near-)zero variance",
            c + 1
        )));
    }
    let mut axes = DMatrix::zeros(d, k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let mut axis = eig.eigenvectors.column(idx).into_owned();
        let lead = axis.iamax();
        if axis[lead] < 0.0 {
            axis.neg_mut();
        }
        axes.set_column(c, &axis);
    }
    let proj = centered * axes;
    let coords: Vec<f64> = proj.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
    DataSet::from_flat(k, coords, x.labels().map(<[u32]>::to_vec))
}

/// Where the reference data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeneratorSpec {
    PointInCircle {
        m: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        convention: NormalConvention,
    },
    HalfCircles {
        m: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        convention: NormalConvention,
    },
    Csv {
        path: PathBuf,
        #[serde(flatten)]
        options: CsvOptions,
    },
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::PointInCircle { m, .. } | GeneratorSpec::HalfCircles { m, .. } if *m == 0 => {
                Err(Error::InvalidConfig("generator size m must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// The generative model behind a synthetic spec.
    pub fn model(&self) -> Option<SyntheticModel> {
        match *self {
            GeneratorSpec::PointInCircle { convention, .. } => Some(SyntheticModel {
                kind: SyntheticKind::PointInCircle,
                convention,
            }),
            GeneratorSpec::HalfCircles { convention, .. } => Some(SyntheticModel {
                kind: SyntheticKind::HalfCircles,
                convention,
            }),
            GeneratorSpec::Csv { .. } => None,
        }
    }

    pub fn build(&self) -> Result<DataSet> {
        use rand::SeedableRng;
        match self {
            GeneratorSpec::PointInCircle { m, seed, .. } | GeneratorSpec::HalfCircles { m, seed, .. } => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                self.model().expect("synthetic").generate(*m, &mut rng)
            }
            GeneratorSpec::Csv { path, options } => load_csv(path, options),
        }
    }
}
