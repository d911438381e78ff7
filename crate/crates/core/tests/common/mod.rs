#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spectral_uq::estimators::{odf_values, Accumulator, ClusterSample};
use spectral_uq::DataSet;

/// Two well separated Gaussian groups plus uniform clutter, so every draw has
/// a clear but not trivial bi-partition.
pub fn random_data(n: usize, dim: usize, seed: u64) -> DataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = n / 2;
    let coords: Vec<f64> = (0..n)
        .flat_map(|i| {
            let shift = if i < split { -2.0 } else { 2.0 };
            (0..dim)
                .map(|c| {
                    let centre = if c == 0 { shift } else { 0.0 };
                    centre + rng.sample::<f64, _>(StandardNormal)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    DataSet::from_flat(dim, coords, None).unwrap()
}

/// A sample whose levels are `+1` on members and `-1` elsewhere.
pub fn sample_from_membership(membership: Vec<bool>, ground: &DataSet) -> ClusterSample {
    let levels = membership.iter().map(|&m| if m { 1.0 } else { -1.0 }).collect();
    let odf = odf_values(&membership, ground).unwrap();
    ClusterSample::new(membership, levels, odf, false, false).unwrap()
}

pub fn line(n: usize) -> DataSet {
    let pts: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
    DataSet::from_points(&pts).unwrap()
}

pub fn accumulate(reference: Vec<bool>, samples: &[Vec<bool>]) -> Accumulator {
    let ground = line(reference.len());
    let mut acc = Accumulator::new(reference);
    for m in samples {
        acc.accumulate(&sample_from_membership(m.clone(), &ground)).unwrap();
    }
    acc
}

/// `sum_i |A_i symdiff S|` for the subset `S` encoded by `mask`.
pub fn symdiff_total(samples: &[Vec<bool>], mask: u32) -> usize {
    samples
        .iter()
        .map(|a| (0..a.len()).filter(|&j| a[j] != (mask >> j & 1 == 1)).count())
        .sum()
}
