//! Fiedler-pair extraction, sign bi-clustering, the out-of-sample extension
//! of a Laplacian eigenvector, and sign gauging against a reference.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::estimators::{odf_values, ClusterSample};
use crate::kernel::{kernel_unchecked, laplacian_of, LaplacianBundle};

/// Spectral gaps below this mark the Fiedler pair as near-degenerate.
pub const DEGENERATE_GAP: f64 = 1e-10;

/// Distance from 1 below which an eigenvalue cannot be extended.
pub const EIGENVALUE_ONE_TOL: f64 = 1e-8;

/// Default near-orthogonality warning threshold for gauging.
pub const DEFAULT_GAUGE_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct FiedlerPair {
    /// Second-smallest eigenvalue of the normalized Laplacian.
    pub lambda: f64,
    /// Unit eigenvector of `lambda`. Its sign is arbitrary.
    pub vector: DVector<f64>,
    /// `lambda_3 - lambda_2`, infinite for two points.
    pub gap: f64,
}

impl FiedlerPair {
    pub fn is_degenerate(&self) -> bool {
        self.gap < DEGENERATE_GAP
    }
}

/// Dense symmetric eigendecomposition of `L`, keeping the eigenpair at
/// ascending index 1.
pub fn fiedler_pair(bundle: &LaplacianBundle) -> Result<FiedlerPair> {
    let n = bundle.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "a Fiedler pair needs at least two points, got {n}"
        )));
    }
    let eig = SymmetricEigen::try_new(bundle.laplacian.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigensolver produced non-finite eigenvalues".into()));
    }
    let idx = order[1];
    let lambda = eig.eigenvalues[idx];
    let gap = if n > 2 {
        eig.eigenvalues[order[2]] - lambda
    } else {
        f64::INFINITY
    };
    let mut vector = eig.eigenvectors.column(idx).into_owned();
    let norm = vector.norm();
    if !(norm > 0.0) {
        return Err(Error::Numeric("eigensolver returned a zero eigenvector".into()));
    }
    vector /= norm;
    Ok(FiedlerPair { lambda, vector, gap })
}

/// Index sets of a sign bi-clustering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// `{i : levels[i] >= 0}`
    pub cluster: Vec<usize>,
    /// `{i : levels[i] < 0}`
    pub complement: Vec<usize>,
}

/// Splits indices by the sign of `levels`; zeros belong to the cluster.
pub fn bi_cluster(levels: &[f64]) -> Partition {
    let (cluster, complement) = (0..levels.len()).partition(|&i| levels[i] >= 0.0);
    Partition { cluster, complement }
}

pub fn membership(levels: &[f64]) -> Vec<bool> {
    levels.iter().map(|&l| l >= 0.0).collect()
}

/// Which similarity the eigenfunction extension integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKernel {
    /// Degree-normalized `h(x, y) = k(x, y) / sqrt(d(x) d(y))`. Reproduces the
    /// eigenvector exactly on the source points.
    #[default]
    Normalized,
    /// Plain `k(x, y)`; kept for comparison only.
    Raw,
}

/// An eigenvector of a sample's Laplacian lifted to a function on the whole
/// data space:
///
/// ```text
/// f(x) = 1/(1 - lambda) * 1/|Y| * sum_{y in Y} h_Y(x, y) v_y
/// h_Y(x, y) = k(x, y) / sqrt(d_Y(x) d_Y(y)),   d_Y(x) = 1/|Y| sum_{z in Y} k(x, z)
/// ```
#[derive(Debug, Clone)]
pub struct ExtendedEigenfunction {
    source: DataSet,
    vector: Vec<f64>,
    lambda: f64,
    source_degrees: Vec<f64>,
    sigma: f64,
    kernel: ExtensionKernel,
}

impl ExtendedEigenfunction {
    pub fn new(
        source: DataSet,
        vector: Vec<f64>,
        lambda: f64,
        sigma: f64,
        kernel: ExtensionKernel,
    ) -> Result<Self> {
        if vector.len() != source.len() {
            return Err(Error::InvalidInput(format!(
                "eigenvector has {} entries for {} source points",
                vector.len(),
                source.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        check_lambda(lambda)?;
        let source_degrees = source
            .points()
            .map(|y| mean_similarity(y, &source, sigma))
            .collect();
        Ok(Self {
            source,
            vector,
            lambda,
            source_degrees,
            sigma,
            kernel,
        })
    }

    /// Clusters `source` with bandwidth `sigma` and wraps its Fiedler pair.
    pub fn fit(source: DataSet, sigma: f64, kernel: ExtensionKernel) -> Result<(Self, FiedlerPair)> {
        let bundle = laplacian_of(&source, sigma)?;
        let pair = fiedler_pair(&bundle)?;
        let n = source.len() as f64;
        let degrees: Vec<f64> = bundle.degrees.iter().map(|d| d / n).collect();
        check_lambda(pair.lambda)?;
        let ef = Self {
            source,
            vector: pair.vector.iter().copied().collect(),
            lambda: pair.lambda,
            source_degrees: degrees,
            sigma,
            kernel,
        };
        Ok((ef, pair))
    }

    /// Same source and eigenvalue, different coefficient vector.
    pub fn with_vector(&self, vector: Vec<f64>) -> Result<Self> {
        if vector.len() != self.source.len() {
            return Err(Error::InvalidInput(format!(
                "eigenvector has {} entries for {} source points",
                vector.len(),
                self.source.len()
            )));
        }
        Ok(Self {
            vector,
            ..self.clone()
        })
    }

    pub fn source(&self) -> &DataSet {
        &self.source
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn source_degrees(&self) -> &[f64] {
        &self.source_degrees
    }

    pub fn kernel(&self) -> ExtensionKernel {
        self.kernel
    }

    /// Evaluates the extension at every target point.
    pub fn evaluate(&self, targets: &DataSet) -> Result<Vec<f64>> {
        extend(self, targets)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || (1.0 - lambda).abs() < EIGENVALUE_ONE_TOL {
        return Err(Error::EigenvalueOne { lambda });
    }
    Ok(())
}

fn mean_similarity(x: &[f64], set: &DataSet, sigma: f64) -> f64 {
    set.points().map(|z| kernel_unchecked(x, z, sigma)).sum::<f64>() / set.len() as f64
}

/// Levels of `ef` at the target points.
pub fn extend(ef: &ExtendedEigenfunction, targets: &DataSet) -> Result<Vec<f64>> {
    check_lambda(ef.lambda)?;
    ef.source.check_dim(targets)?;
    let m = ef.source.len();
    let scale = 1.0 / ((1.0 - ef.lambda) * m as f64);
    let weights: Vec<f64> = match ef.kernel {
        ExtensionKernel::Normalized => ef
            .vector
            .iter()
            .zip(&ef.source_degrees)
            .map(|(v, d)| v / d.sqrt())
            .collect(),
        ExtensionKernel::Raw => ef.vector.clone(),
    };
    let mut row = vec![0.0; m];
    let levels = targets
        .points()
        .map(|x| {
            for (r, y) in row.iter_mut().zip(ef.source.points()) {
                *r = kernel_unchecked(x, y, ef.sigma);
            }
            let dot: f64 = row.iter().zip(&weights).map(|(k, w)| k * w).sum();
            match ef.kernel {
                ExtensionKernel::Normalized => {
                    let dx = row.iter().sum::<f64>() / m as f64;
                    scale * dot / dx.sqrt()
                }
                ExtensionKernel::Raw => scale * dot,
            }
        })
        .collect();
    Ok(levels)
}

/// Fixed reference the signs of all sample levels are aligned with.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeContext {
    reference_levels: Vec<f64>,
    reference_norm: f64,
    tolerance: f64,
}

impl GaugeContext {
    pub fn new(reference_levels: Vec<f64>, tolerance: f64) -> Result<Self> {
        let reference_norm = norm(&reference_levels);
        if !(reference_norm > 0.0) || !reference_norm.is_finite() {
            return Err(Error::InvalidInput(
                "gauge reference must have finite nonzero norm".into(),
            ));
        }
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "gauge tolerance must be nonnegative, got {tolerance}"
            )));
        }
        Ok(Self {
            reference_levels,
            reference_norm,
            tolerance,
        })
    }

    pub fn reference_levels(&self) -> &[f64] {
        &self.reference_levels
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauge {
    /// `+1.0` or `-1.0`.
    pub sign: f64,
    /// Absolute cosine with the reference fell below the tolerance.
    pub warned: bool,
    pub cosine: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn gauge_sign(levels: &[f64], ctx: &GaugeContext) -> Result<Gauge> {
    if levels.len() != ctx.reference_levels.len() {
        return Err(Error::DimensionMismatch {
            expected: ctx.reference_levels.len(),
            found: levels.len(),
        });
    }
    let n = norm(levels);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidInput("cannot gauge a zero-norm level vector".into()));
    }
    let dot: f64 = levels.iter().zip(&ctx.reference_levels).map(|(a, b)| a * b).sum();
    let cosine = dot / (n * ctx.reference_norm);
    Ok(Gauge {
        sign: if dot >= 0.0 { 1.0 } else { -1.0 },
        warned: cosine.abs() < ctx.tolerance,
        cosine,
    })
}

/// Clusters `sample`, extends its Fiedler vector onto `reference`, gauges the
/// levels, and splits the reference points by sign.
pub fn cluster_reference_under_sample(
    reference: &DataSet,
    sample: &DataSet,
    sigma: f64,
    ctx: &GaugeContext,
    kernel: ExtensionKernel,
) -> Result<ClusterSample> {
    if sample.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "corrupted sample has {} point(s); at least two are needed",
            sample.len()
        )));
    }
    reference.check_dim(sample)?;
    let (ef, pair) = ExtendedEigenfunction::fit(sample.clone(), sigma, kernel)?;
    let mut levels = extend(&ef, reference)?;
    let gauge = gauge_sign(&levels, ctx)?;
    if gauge.sign < 0.0 {
        levels.iter_mut().for_each(|l| *l = -*l);
    }
    let membership = membership(&levels);
    let odf = odf_values(&membership, reference)?;
    ClusterSample::new(membership, levels, odf, gauge.warned, pair.is_degenerate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assert_close;
    use crate::kernel::laplacian;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn fiedler_of_two_point_laplacian() {
        let b = laplacian(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let p = fiedler_pair(&b).unwrap();
        assert_close!(p.lambda, 1.0, 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close!(p.vector[0].abs(), s, 1e-14);
        assert_close!(p.vector[0] + p.vector[1], 0.0, 1e-14);
        assert!(p.gap.is_infinite());
    }

    #[test]
    fn fiedler_eigenvalue_for_half_similarity() {
        let b = laplacian(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        assert_close!(fiedler_pair(&b).unwrap().lambda, 2.0 / 3.0, 1e-14);
    }

    #[test]
    fn fiedler_rejects_single_point() {
        let b = laplacian(DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!(matches!(fiedler_pair(&b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn fiedler_separates_distant_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pts = Vec::new();
        let mut blob = Vec::new();
        for i in 0..40 {
            let c = if i < 20 { 0.0 } else { 10.0 };
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            pts.push([c + x, y]);
            blob.push(i < 20);
        }
        let x = DataSet::from_points(&pts).unwrap();
        let b = laplacian_of(&x, 1.0).unwrap();
        let p = fiedler_pair(&b).unwrap();
        let m = membership(p.vector.as_slice());
        let agree = m.iter().zip(&blob).filter(|(a, b)| a == b).count();
        assert!(agree == 40 || agree == 0, "agree = {agree}");
    }

    #[test]
    fn bi_cluster_examples() {
        let p = bi_cluster(&[0.3, -0.2, 0.0]);
        assert_eq!(p.cluster, vec![0, 2]);
        assert_eq!(p.complement, vec![1]);
        assert!(bi_cluster(&[0.0, 1.0, 2.0]).complement.is_empty());
        let q = bi_cluster(&[-0.3, 0.2, -0.0]);
        // -0.0 >= 0 holds, zeros stay in the cluster
        assert_eq!(q.cluster, vec![1, 2]);
    }

    #[test]
    fn extension_vanishes_at_midpoint() {
        let src = DataSet::from_points(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let a = (-1.0f64).exp();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ef = ExtendedEigenfunction::new(
            src,
            vec![s, -s],
            2.0 * a / (1.0 + a),
            1.0,
            ExtensionKernel::Normalized,
        )
        .unwrap();
        let mid = DataSet::from_points(&[[0.5, 0.5]]).unwrap();
        assert_close!(ef.evaluate(&mid).unwrap()[0], 0.0, 1e-12);
    }

    #[test]
    fn extension_reproduces_vector_on_source() {
        let src = DataSet::from_points(&[[0.0], [0.4], [0.9], [3.0], [3.3]]).unwrap();
        let (ef, pair) = ExtendedEigenfunction::fit(src.clone(), 1.0, ExtensionKernel::Normalized).unwrap();
        let back = ef.evaluate(&src).unwrap();
        for (a, b) in back.iter().zip(pair.vector.iter()) {
            assert_close!(*a, *b, 1e-10);
        }
        // constructor route computes the same degrees
        let again = ExtendedEigenfunction::new(
            src.clone(),
            ef.vector().to_vec(),
            ef.lambda(),
            1.0,
            ExtensionKernel::Normalized,
        )
        .unwrap();
        for (a, b) in again.source_degrees().iter().zip(ef.source_degrees()) {
            assert_close!(*a, *b, 1e-14);
        }
    }

    #[test]
    fn extension_sign_flip_is_exact() {
        let src = DataSet::from_points(&[[0.0], [0.4], [0.9], [3.0]]).unwrap();
        let (ef, _) = ExtendedEigenfunction::fit(src, 1.0, ExtensionKernel::Normalized).unwrap();
        let flipped = ef.with_vector(ef.vector().iter().map(|v| -v).collect()).unwrap();
        let t = DataSet::from_points(&[[0.1], [-2.0], [7.5]]).unwrap();
        let a = ef.evaluate(&t).unwrap();
        let b = flipped.evaluate(&t).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn extension_rejects_eigenvalue_one_and_bad_dims() {
        let src = DataSet::from_points(&[[0.0], [1.0]]).unwrap();
        let err = ExtendedEigenfunction::new(src.clone(), vec![1.0, -1.0], 1.0, 1.0, ExtensionKernel::Normalized);
        assert!(matches!(err, Err(Error::EigenvalueOne { .. })));
        let ef = ExtendedEigenfunction::new(src, vec![1.0, -1.0], 0.5, 1.0, ExtensionKernel::Normalized).unwrap();
        let t = DataSet::from_points(&[[0.0, 0.0]]).unwrap();
        assert!(matches!(ef.evaluate(&t), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gauge_examples() {
        let r = vec![1.0, -2.0, 0.5];
        let ctx = GaugeContext::new(r.clone(), 1e-2).unwrap();
        let g = gauge_sign(&r, &ctx).unwrap();
        assert_eq!((g.sign, g.warned), (1.0, false));
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let g = gauge_sign(&neg, &ctx).unwrap();
        assert_eq!((g.sign, g.warned), (-1.0, false));
        let ortho = vec![2.0, 1.0, 0.0];
        let g = gauge_sign(&ortho, &ctx).unwrap();
        assert_eq!((g.sign, g.warned), (1.0, true));
        let tiny = GaugeContext::new(r, 1e-300).unwrap();
        assert!(gauge_sign(&ortho, &tiny).unwrap().warned);
        assert!(gauge_sign(&[0.0, 0.0, 0.0], &ctx).is_err());
        assert!(GaugeContext::new(vec![0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn sample_needs_two_points() {
        let x = DataSet::from_points(&[[0.0], [1.0], [2.0]]).unwrap();
        let ctx = GaugeContext::new(vec![1.0, 0.0, -1.0], 0.01).unwrap();
        let one = DataSet::from_points(&[[0.0]]).unwrap();
        let err = cluster_reference_under_sample(&x, &one, 1.0, &ctx, ExtensionKernel::Normalized);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn uncorrupted_sample_reproduces_reference_clustering() {
        let x = DataSet::from_points(&[[0.0, 0.1], [0.3, -0.2], [0.2, 0.4], [2.5, 2.0], [2.9, 2.4], [3.1, 1.8]])
            .unwrap();
        let (ef, pair) = ExtendedEigenfunction::fit(x.clone(), 1.0, ExtensionKernel::Normalized).unwrap();
        let ctx = GaugeContext::new(ef.vector().to_vec(), 0.01).unwrap();
        let s = cluster_reference_under_sample(&x, &x, 1.0, &ctx, ExtensionKernel::Normalized).unwrap();
        assert_eq!(s.membership, membership(pair.vector.as_slice()));
        assert!(!s.warned);
    }

    #[test]
    fn duplicated_sample_keeps_clustering() {
        let x = DataSet::from_points(&[[0.0, 0.1], [0.3, -0.2], [0.2, 0.4], [2.5, 2.0], [2.9, 2.4], [3.1, 1.8], [1.4, 1.1]])
            .unwrap();
        let mut doubled = x.coords().to_vec();
        doubled.extend_from_slice(x.coords());
        let dup = DataSet::from_flat(2, doubled, None).unwrap();
        let (ef, _) = ExtendedEigenfunction::fit(x.clone(), 1.0, ExtensionKernel::Normalized).unwrap();
        let ctx = GaugeContext::new(ef.vector().to_vec(), 0.01).unwrap();
        let a = cluster_reference_under_sample(&x, &x, 1.0, &ctx, ExtensionKernel::Normalized).unwrap();
        let b = cluster_reference_under_sample(&x, &dup, 1.0, &ctx, ExtensionKernel::Normalized).unwrap();
        assert_eq!(a.membership, b.membership);
        // the doubled eigenvector is (v, v)/sqrt(2); unit-normalized levels agree
        let ua = a.unit_levels();
        let ub = b.unit_levels();
        for (p, q) in ua.iter().zip(&ub) {
            assert_close!(*p, *q, 1e-8);
        }
        for (p, q) in a.levels.iter().zip(&b.levels) {
            assert_close!(*p, *q * std::f64::consts::SQRT_2, 1e-8);
        }
    }
}
