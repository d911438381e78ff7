//! Random corruption of a reference set: per-cluster deletion, regeneration
//! of deleted points, optional additional points, and additive Gaussian
//! noise on the survivors.
//!
//! Every sample draws from its own counter-based stream, so a sample is a
//! pure function of `(master_seed, sample_index)` regardless of which worker
//! computes it. Within one sample the stream is consumed in a fixed order:
//! deletion fractions and victims per cluster (ascending label), then
//! regenerated points (ascending index of the deleted point), then
//! additional points, then survivor noise (ascending point index).

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::datasets::SyntheticModel;
use crate::error::{Error, Result};

/// Whether deletion fractions are drawn per labelled cluster or once for the
/// whole set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeletionScope {
    #[default]
    PerCluster,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptionConfig {
    /// Deleted fraction per cluster is drawn from `U([lo, hi])`.
    pub deletion_range: [f64; 2],
    /// Standard deviation of the additive survivor noise.
    pub noise_std: f64,
    /// Replace deleted points with fresh draws.
    pub regenerate: bool,
    /// Extra points added on top of the regenerated ones.
    pub additional_points: usize,
    pub scope: DeletionScope,
    pub master_seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            deletion_range: [0.01, 0.07],
            noise_std: 0.0,
            regenerate: true,
            additional_points: 0,
            scope: DeletionScope::PerCluster,
            master_seed: 0,
        }
    }
}

impl CorruptionConfig {
    /// No deletion, no noise, no additions.
    pub fn identity() -> Self {
        Self {
            deletion_range: [0.0, 0.0],
            noise_std: 0.0,
            regenerate: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.deletion_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "deletion range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise standard deviation must be nonnegative, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// Where replacement and additional points come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegenerationSource {
    /// Fresh draws from the cluster's generative model.
    Generator { model: SyntheticModel },
    /// Uniform resample of the reference set (within the cluster when
    /// labelled), perturbed with the survivor noise level.
    Bootstrap,
}

/// Provenance of a point in a corrupted sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Perturbed copy of the reference point with this index.
    Survivor(usize),
    /// Fresh draw standing in for the deleted reference point.
    Regenerated { replaces: usize },
    Additional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorruptedSample {
    pub data: DataSet,
    pub origin: Vec<Origin>,
}

impl CorruptedSample {
    pub fn survivors(&self) -> usize {
        self.origin
            .iter()
            .filter(|o| matches!(o, Origin::Survivor(_)))
            .count()
    }
}

/// The random stream of Monte Carlo sample `sample_index`.
///
/// The ChaCha key comes from `master_seed` and the stream id is the sample
/// index, giving 2^64 non-overlapping streams per seed.
pub fn sample_stream(master_seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(sample_index);
    rng
}

fn groups(x: &DataSet, scope: DeletionScope) -> Result<Vec<(Option<u32>, Vec<usize>)>> {
    match scope {
        DeletionScope::Global => Ok(vec![(None, (0..x.len()).collect())]),
        DeletionScope::PerCluster => {
            let labels = x.labels().ok_or_else(|| {
                Error::InvalidConfig("per-cluster deletion requires labelled data".into())
            })?;
            let clusters = x.clusters().expect("labelled");
            Ok(clusters
                .into_iter()
                .map(|c| (Some(c), (0..x.len()).filter(|&i| labels[i] == c).collect()))
                .collect())
        }
    }
}

fn gaussian_shift<R: Rng + ?Sized>(p: &[f64], std: f64, rng: &mut R, out: &mut Vec<f64>) {
    if std > 0.0 {
        out.extend(p.iter().map(|v| v + std * rng.sample::<f64, _>(StandardNormal)));
    } else {
        out.extend_from_slice(p);
    }
}

/// Draws corrupted sample `sample_index` of `x`.
///
/// Output order: survivors (ascending reference index), regenerated points,
/// additional points.
pub fn corrupt(
    x: &DataSet,
    cfg: &CorruptionConfig,
    src: &RegenerationSource,
    sample_index: u64,
) -> Result<CorruptedSample> {
    cfg.validate()?;
    let groups = groups(x, cfg.scope)?;
    let mut rng = sample_stream(cfg.master_seed, sample_index);
    let [lo, hi] = cfg.deletion_range;

    let mut deleted = vec![false; x.len()];
    for (_, members) in &groups {
        let fraction = if lo < hi { rng.random_range(lo..=hi) } else { lo };
        let count = ((fraction * members.len() as f64).round() as usize).min(members.len());
        for k in index::sample(&mut rng, members.len(), count) {
            deleted[members[k]] = true;
        }
    }
    if !cfg.regenerate && cfg.additional_points == 0 && deleted.iter().all(|&d| d) {
        return Err(Error::EmptySample);
    }

    let dim = x.dim();
    let group_of = |i: usize| -> &Vec<usize> {
        groups
            .iter()
            .map(|(_, m)| m)
            .find(|m| m.binary_search(&i).is_ok())
            .expect("every index belongs to a group")
    };
    let labelled = x.labels();
    let mut fresh_coords = Vec::new();
    let mut fresh_labels = Vec::new();
    let mut fresh_origin = Vec::new();
    let draw_like = |i: usize, rng: &mut ChaCha8Rng, out: &mut Vec<f64>| -> Result<()> {
        match src {
            RegenerationSource::Generator { model } => {
                let label = labelled.map(|l| l[i]).ok_or_else(|| {
                    Error::InvalidConfig("generator regeneration requires labelled data".into())
                })?;
                let p = model.sample_point(label, rng)?;
                if p.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: p.len(),
                    });
                }
                out.extend_from_slice(&p);
            }
            RegenerationSource::Bootstrap => {
                let pool = group_of(i);
                let j = pool[rng.random_range(0..pool.len())];
                gaussian_shift(x.point(j), cfg.noise_std, rng, out);
            }
        }
        Ok(())
    };
    if cfg.regenerate {
        for i in (0..x.len()).filter(|&i| deleted[i]) {
            draw_like(i, &mut rng, &mut fresh_coords)?;
            fresh_labels.push(labelled.map_or(0, |l| l[i]));
            fresh_origin.push(Origin::Regenerated { replaces: i });
        }
    }
    for _ in 0..cfg.additional_points {
        let i = rng.random_range(0..x.len());
        draw_like(i, &mut rng, &mut fresh_coords)?;
        fresh_labels.push(labelled.map_or(0, |l| l[i]));
        fresh_origin.push(Origin::Additional);
    }

    let mut coords = Vec::with_capacity(x.coords().len() + fresh_coords.len());
    let mut labels = Vec::with_capacity(x.len() + fresh_labels.len());
    let mut origin = Vec::with_capacity(x.len() + fresh_origin.len());
    for i in (0..x.len()).filter(|&i| !deleted[i]) {
        gaussian_shift(x.point(i), cfg.noise_std, &mut rng, &mut coords);
        labels.push(labelled.map_or(0, |l| l[i]));
        origin.push(Origin::Survivor(i));
    }
    coords.extend(fresh_coords);
    labels.extend(fresh_labels);
    origin.extend(fresh_origin);
    if origin.is_empty() {
        return Err(Error::EmptySample);
    }
    let data = DataSet::from_flat(dim, coords, labelled.map(|_| labels))?;
    Ok(CorruptedSample { data, origin })
}
