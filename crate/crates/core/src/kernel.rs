//! Gaussian similarity, the minimum-spanning-tree bandwidth heuristic, and
//! assembly of the symmetric normalized graph Laplacian
//! `L = I - D^{-1/2} K D^{-1/2}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{distance, squared_distance, DataSet};
use crate::error::{Error, Result};

/// `k(x, y) = exp(-|x - y|^2 / (2 sigma^2))`.
pub fn gaussian_similarity(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    check_sigma(sigma)?;
    Ok(kernel_unchecked(x, y, sigma))
}

#[inline]
pub(crate) fn kernel_unchecked(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    (-squared_distance(x, y) / (2.0 * sigma * sigma)).exp()
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Length of the longest edge of a Euclidean minimum spanning tree of `x`.
///
/// Dense Prim, `O(n^2)` time and `O(n)` memory.
pub fn mst_max_edge(x: &DataSet) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DegenerateData(
            "bandwidth heuristic needs at least two points".into(),
        ));
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut longest = 0.0f64;
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let p = x.point(current);
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = distance(p, x.point(j));
            if d < best[j] {
                best[j] = d;
            }
            if best[j] < next_d {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        longest = longest.max(next_d);
        current = next;
    }
    Ok(longest)
}

/// Bandwidth `scale * (longest MST edge)`.
pub fn mst_sigma(x: &DataSet, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("scale must be positive, got {scale}")));
    }
    let longest = mst_max_edge(x)?;
    if longest <= 0.0 {
        return Err(Error::DegenerateData(
            "all points coincide; the spanning tree has zero length".into(),
        ));
    }
    Ok(scale * longest)
}

/// How the kernel bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Bandwidth {
    Fixed { sigma: f64 },
    Mst { scale: f64 },
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Mst { scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    pub bandwidth: Bandwidth,
    /// Recompute the heuristic bandwidth on every corrupted sample instead of
    /// reusing the reference set's value.
    pub recompute_per_sample: bool,
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        match self.bandwidth {
            Bandwidth::Fixed { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::InvalidConfig(format!("sigma must be positive, got {sigma}")),
            ),
            Bandwidth::Mst { scale } if !(scale > 0.0 && scale.is_finite()) => Err(
                Error::InvalidConfig(format!("bandwidth scale must be positive, got {scale}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, x: &DataSet) -> Result<f64> {
        match self.bandwidth {
            Bandwidth::Fixed { sigma } => {
                check_sigma(sigma)?;
                Ok(sigma)
            }
            Bandwidth::Mst { scale } => mst_sigma(x, scale),
        }
    }
}

/// `K_X = [k(x, y)]`, symmetric with unit diagonal.
pub fn similarity_matrix(x: &DataSet, sigma: f64) -> Result<DMatrix<f64>> {
    check_sigma(sigma)?;
    let n = x.len();
    let mut k = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = kernel_unchecked(x.point(i), x.point(j), sigma);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Similarity matrix together with its degrees and normalized Laplacian.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub similarity: DMatrix<f64>,
    /// Row sums of the similarity matrix (the diagonal of `D`).
    pub degrees: DVector<f64>,
    pub laplacian: DMatrix<f64>,
}

impl LaplacianBundle {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// `D^{1/2} 1`, the eigenvector of eigenvalue zero.
    pub fn null_vector(&self) -> DVector<f64> {
        self.degrees.map(f64::sqrt)
    }
}

pub fn laplacian(similarity: DMatrix<f64>) -> Result<LaplacianBundle> {
    let n = similarity.nrows();
    if n == 0 || similarity.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "similarity matrix must be square and non-empty, got {}x{}",
            n,
            similarity.ncols()
        )));
    }
    let degrees = DVector::from_iterator(n, similarity.row_iter().map(|r| r.sum()));
    if let Some((row, &sum)) = degrees.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::InvalidSimilarity { row, sum });
    }
    let inv_sqrt = degrees.map(|d| 1.0 / d.sqrt());
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            // average the mirrored entries so L is exactly symmetric
            let kij = 0.5 * (similarity[(i, j)] + similarity[(j, i)]);
            let id = if i == j { 1.0 } else { 0.0 };
            l[(i, j)] = id - inv_sqrt[i] * kij * inv_sqrt[j];
        }
    }
    Ok(LaplacianBundle {
        similarity,
        degrees,
        laplacian: l,
    })
}

/// Convenience: similarity matrix and Laplacian of `x` in one step.
pub fn laplacian_of(x: &DataSet, sigma: f64) -> Result<LaplacianBundle> {
    laplacian(similarity_matrix(x, sigma)?)
}
