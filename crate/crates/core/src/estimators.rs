//! Monte Carlo accumulation of gauged clusterings and the set-valued
//! expectations built from them: coverage function, expected misclustering
//! rate, Vorob'ev (Kovyazin) mean, ODF expectation and spectral expectation.

use serde::{Deserialize, Serialize};

use crate::data::{distance, DataSet};
use crate::error::{Error, Result};

/// One gauged Monte Carlo realization, expressed on the reference points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSample {
    pub membership: Vec<bool>,
    pub levels: Vec<f64>,
    /// Oriented distance `b_A(x)`; `+inf` when the complement is empty and
    /// `-inf` when the cluster is empty.
    pub odf: Vec<f64>,
    pub cardinality: usize,
    pub warned: bool,
    pub degenerate_gap: bool,
}

impl ClusterSample {
    pub fn new(
        membership: Vec<bool>,
        levels: Vec<f64>,
        odf: Vec<f64>,
        warned: bool,
        degenerate_gap: bool,
    ) -> Result<Self> {
        let n = membership.len();
        if levels.len() != n || odf.len() != n {
            return Err(Error::InvalidInput(format!(
                "sample vectors disagree in length: membership {n}, levels {}, odf {}",
                levels.len(),
                odf.len()
            )));
        }
        if let Some(i) = (0..n).find(|&i| membership[i] != (levels[i] >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "membership of point {i} disagrees with the sign of its level"
            )));
        }
        let cardinality = membership.iter().filter(|&&m| m).count();
        Ok(Self {
            membership,
            levels,
            odf,
            cardinality,
            warned,
            degenerate_gap,
        })
    }

    /// Levels scaled to unit Euclidean norm (zero vector stays zero).
    pub fn unit_levels(&self) -> Vec<f64> {
        let norm = self.levels.iter().map(|l| l * l).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.levels.iter().map(|l| l / norm).collect()
        } else {
            self.levels.clone()
        }
    }
}

/// `b_C(x) = d_{X \ C}(x) - d_C(x)` for every point of `x`, with `d_{empty} = inf`.
pub fn odf_values(membership: &[bool], x: &DataSet) -> Result<Vec<f64>> {
    if membership.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: membership.len(),
        });
    }
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let p = x.point(i);
        let mut to_cluster = f64::INFINITY;
        let mut to_complement = f64::INFINITY;
        for j in 0..n {
            let d = if i == j { 0.0 } else { distance(p, x.point(j)) };
            if membership[j] {
                to_cluster = to_cluster.min(d);
            } else {
                to_complement = to_complement.min(d);
            }
        }
        out.push(match (to_cluster.is_finite(), to_complement.is_finite()) {
            (true, true) => to_complement - to_cluster,
            (true, false) => f64::INFINITY,
            (false, _) => f64::NEG_INFINITY,
        });
    }
    Ok(out)
}

/// Running Monte Carlo sums over gauged samples.
///
/// Integer fields are exactly order independent. Floating sums depend on the
/// order samples are added, so parallel callers merge partial accumulators
/// in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    reference: Vec<bool>,
    samples: u64,
    coverage_counts: Vec<u64>,
    level_sums: Vec<f64>,
    unit_level_sums: Vec<f64>,
    odf_sums: Vec<f64>,
    odf_pos_inf: Vec<u64>,
    odf_neg_inf: Vec<u64>,
    symdiff_sum: u64,
    cardinality_sum: u64,
    warn_count: u64,
    degenerate_count: u64,
}

impl Accumulator {
    pub fn new(reference_membership: Vec<bool>) -> Self {
        let n = reference_membership.len();
        Self {
            reference: reference_membership,
            samples: 0,
            coverage_counts: vec![0; n],
            level_sums: vec![0.0; n],
            unit_level_sums: vec![0.0; n],
            odf_sums: vec![0.0; n],
            odf_pos_inf: vec![0; n],
            odf_neg_inf: vec![0; n],
            symdiff_sum: 0,
            cardinality_sum: 0,
            warn_count: 0,
            degenerate_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn accumulate(&mut self, s: &ClusterSample) -> Result<()> {
        let n = self.len();
        if s.membership.len() != n || s.levels.len() != n || s.odf.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.membership.len(),
            });
        }
        self.samples += 1;
        let unit = s.unit_levels();
        for i in 0..n {
            if s.membership[i] {
                self.coverage_counts[i] += 1;
            }
            if s.membership[i] != self.reference[i] {
                self.symdiff_sum += 1;
            }
            self.level_sums[i] += s.levels[i];
            self.unit_level_sums[i] += unit[i];
            let b = s.odf[i];
            if b == f64::INFINITY {
                self.odf_pos_inf[i] += 1;
            } else if b == f64::NEG_INFINITY {
                self.odf_neg_inf[i] += 1;
            } else {
                self.odf_sums[i] += b;
            }
        }
        self.cardinality_sum += s.cardinality as u64;
        self.warn_count += u64::from(s.warned);
        self.degenerate_count += u64::from(s.degenerate_gap);
        Ok(())
    }

    /// Folds `other` into `self`. Both must share the reference clustering.
    pub fn merge(&mut self, other: &Accumulator) -> Result<()> {
        if other.reference != self.reference {
            return Err(Error::InvalidInput(
                "cannot merge accumulators with different reference clusterings".into(),
            ));
        }
        self.samples += other.samples;
        for i in 0..self.len() {
            self.coverage_counts[i] += other.coverage_counts[i];
            self.level_sums[i] += other.level_sums[i];
            self.unit_level_sums[i] += other.unit_level_sums[i];
            self.odf_sums[i] += other.odf_sums[i];
            self.odf_pos_inf[i] += other.odf_pos_inf[i];
            self.odf_neg_inf[i] += other.odf_neg_inf[i];
        }
        self.symdiff_sum += other.symdiff_sum;
        self.cardinality_sum += other.cardinality_sum;
        self.warn_count += other.warn_count;
        self.degenerate_count += other.degenerate_count;
        Ok(())
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn reference(&self) -> &[bool] {
        &self.reference
    }

    pub fn coverage_counts(&self) -> &[u64] {
        &self.coverage_counts
    }

    pub fn level_sums(&self) -> &[f64] {
        &self.level_sums
    }

    pub fn odf_sums(&self) -> &[f64] {
        &self.odf_sums
    }

    pub fn symdiff_sum(&self) -> u64 {
        self.symdiff_sum
    }

    pub fn cardinality_sum(&self) -> u64 {
        self.cardinality_sum
    }

    pub fn warn_count(&self) -> u64 {
        self.warn_count
    }

    pub fn degenerate_count(&self) -> u64 {
        self.degenerate_count
    }

    fn require_samples(&self) -> Result<f64> {
        if self.samples == 0 {
            Err(Error::NoSamples)
        } else {
            Ok(self.samples as f64)
        }
    }

    /// Empirical coverage function `E_M[1_A](x)`.
    pub fn coverage(&self) -> Result<Vec<f64>> {
        let m = self.require_samples()?;
        Ok(self.coverage_counts.iter().map(|&c| c as f64 / m).collect())
    }

    /// Mean size of the symmetric difference to the reference cluster.
    pub fn expected_misclustering_rate(&self) -> Result<f64> {
        Ok(self.symdiff_sum as f64 / self.require_samples()?)
    }

    /// Mean sample cluster cardinality `Gamma_M`.
    pub fn mean_cardinality(&self) -> Result<f64> {
        Ok(self.cardinality_sum as f64 / self.require_samples()?)
    }

    pub fn mean_levels(&self) -> Result<Vec<f64>> {
        let m = self.require_samples()?;
        Ok(self.level_sums.iter().map(|s| s / m).collect())
    }

    pub fn mean_unit_levels(&self) -> Result<Vec<f64>> {
        let m = self.require_samples()?;
        Ok(self.unit_level_sums.iter().map(|s| s / m).collect())
    }

    /// Pointwise ODF mean. A point with infinite contributions of one sign
    /// gets that infinity; contributions of both signs give NaN.
    pub fn mean_odf(&self) -> Result<Vec<f64>> {
        let m = self.require_samples()?;
        Ok((0..self.len())
            .map(|i| match (self.odf_pos_inf[i] > 0, self.odf_neg_inf[i] > 0) {
                (false, false) => self.odf_sums[i] / m,
                (true, false) => f64::INFINITY,
                (false, true) => f64::NEG_INFINITY,
                (true, true) => f64::NAN,
            })
            .collect())
    }
}

/// Result of the empirical Vorob'ev construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KovyazinMean {
    pub set: Vec<usize>,
    pub t_star: f64,
    /// Target cardinality: `gamma` rounded to the nearest integer, ties down.
    pub target: usize,
    /// The points strictly above `t_star` already outnumber `target`.
    pub overfull: bool,
}

/// Nearest integer with ties broken downward.
pub fn round_half_down(x: f64) -> usize {
    (x - 0.5).ceil().max(0.0) as usize
}

/// Kovyazin mean of a coverage function with mean cardinality `gamma`.
///
/// `t* = inf { t in [0, 1] : |{coverage >= t}| <= gamma }`, evaluated exactly
/// over the distinct coverage values. The set holds every point above `t*`
/// and is topped up with points at `t*` in ascending index order until it
/// reaches the target cardinality.
pub fn kovyazin_mean(coverage: &[f64], gamma: f64) -> Result<KovyazinMean> {
    let n = coverage.len();
    if let Some(i) = coverage.iter().position(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::InvalidInput(format!(
            "coverage of point {i} is {} and lies outside [0, 1]",
            coverage[i]
        )));
    }
    if !(0.0..=n as f64).contains(&gamma) {
        return Err(Error::InvalidInput(format!(
            "mean cardinality {gamma} outside [0, {n}]"
        )));
    }
    let above = |t: f64| coverage.iter().filter(|&&c| c > t).count();
    let t_star = if n as f64 <= gamma {
        0.0
    } else {
        let mut levels: Vec<f64> = coverage.to_vec();
        levels.push(0.0);
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        // F is constant on (c_k, c_{k+1}] with value |{coverage > c_k}|
        levels
            .into_iter()
            .find(|&c| above(c) as f64 <= gamma)
            .unwrap_or(1.0)
    };
    let target = round_half_down(gamma);
    let mut set: Vec<usize> = (0..n).filter(|&i| coverage[i] > t_star).collect();
    let overfull = set.len() > target;
    if !overfull {
        let boundary = (0..n).filter(|&i| coverage[i] == t_star);
        let missing = target - set.len();
        set.extend(boundary.take(missing));
        set.sort_unstable();
    }
    Ok(KovyazinMean {
        set,
        t_star,
        target,
        overfull,
    })
}

/// Zero superlevel set of the mean ODF.
#[derive(Debug, Clone, PartialEq)]
pub struct OdfExpectation {
    pub set: Vec<usize>,
    /// Points whose mean ODF is not finite.
    pub flagged: Vec<usize>,
}

pub fn odf_expectation(acc: &Accumulator) -> Result<OdfExpectation> {
    let mean = acc.mean_odf()?;
    Ok(OdfExpectation {
        set: (0..mean.len()).filter(|&i| mean[i] >= 0.0).collect(),
        flagged: (0..mean.len()).filter(|&i| !mean[i].is_finite()).collect(),
    })
}

/// Zero superlevel set of the mean gauged levels.
pub fn spectral_expectation(acc: &Accumulator) -> Result<Vec<usize>> {
    let mean = acc.mean_levels()?;
    Ok((0..mean.len()).filter(|&i| mean[i] >= 0.0).collect())
}

/// All Monte Carlo quantities of interest for one corruption level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub samples: u64,
    pub coverage: Vec<f64>,
    pub expected_misclustering_rate: f64,
    pub mean_cardinality: f64,
    pub t_star: f64,
    pub vorobev_set: Vec<usize>,
    pub vorobev_overfull: bool,
    pub odf_set: Vec<usize>,
    pub odf_flagged: Vec<usize>,
    pub spectral_set: Vec<usize>,
    pub mean_levels: Vec<f64>,
    pub mean_unit_levels: Vec<f64>,
    pub mean_odf: Vec<f64>,
    pub reference_membership: Vec<bool>,
    pub warn_count: u64,
    pub degenerate_gap_count: u64,
}

impl ExpectationReport {
    pub fn reference_set(&self) -> Vec<usize> {
        (0..self.reference_membership.len())
            .filter(|&i| self.reference_membership[i])
            .collect()
    }
}

pub fn finalize(acc: &Accumulator) -> Result<ExpectationReport> {
    let coverage = acc.coverage()?;
    let gamma = acc.mean_cardinality()?;
    let kov = kovyazin_mean(&coverage, gamma)?;
    let odf = odf_expectation(acc)?;
    Ok(ExpectationReport {
        samples: acc.samples(),
        expected_misclustering_rate: acc.expected_misclustering_rate()?,
        mean_cardinality: gamma,
        t_star: kov.t_star,
        vorobev_set: kov.set,
        vorobev_overfull: kov.overfull,
        odf_set: odf.set,
        odf_flagged: odf.flagged,
        spectral_set: spectral_expectation(acc)?,
        mean_levels: acc.mean_levels()?,
        mean_unit_levels: acc.mean_unit_levels()?,
        mean_odf: acc.mean_odf()?,
        reference_membership: acc.reference().to_vec(),
        warn_count: acc.warn_count(),
        degenerate_gap_count: acc.degenerate_count(),
        coverage,
    })
}
