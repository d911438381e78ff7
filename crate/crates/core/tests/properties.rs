mod common;

use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_uq::corruption::{corrupt, CorruptionConfig, Origin, RegenerationSource};
use spectral_uq::datasets::{gen_point_in_circle, normalize, Normalization, SyntheticKind, SyntheticModel};
use spectral_uq::estimators::{finalize, odf_values, Accumulator, ClusterSample};
use spectral_uq::kernel::{laplacian_of, mst_max_edge, mst_sigma};
use spectral_uq::spectral::{
    cluster_reference_under_sample, extend, fiedler_pair, gauge_sign, membership, ExtendedEigenfunction,
    ExtensionKernel, GaugeContext,
};
use spectral_uq::DataSet;

use common::{accumulate, random_data, symdiff_total};

fn points(max_n: usize, dim: usize) -> impl Strategy<Value = DataSet> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), 2..=max_n)
        .prop_map(|pts| DataSet::from_points(&pts).unwrap())
        .prop_filter("distinct points", |x| mst_max_edge(x).is_ok_and(|e| e > 1e-3))
}

fn memberships(n: usize, m: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = Vec<Vec<bool>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), n), m)
}

/// Longest edge of the minimum spanning tree, by Kruskal over every edge.
fn kruskal_max_edge(x: &DataSet) -> f64 {
    let n = x.len();
    let mut edges: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (spectral_uq::data::distance(x.point(i), x.point(j)), i, j))
        .collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        if p[i] != i {
            p[i] = find(p, p[i]);
        }
        p[i]
    }
    let mut longest = 0.0;
    for (w, i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            longest = w;
        }
    }
    longest
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_symmetric_with_bounded_spectrum(x in points(25, 3), scale in 0.2f64..3.0) {
        let bundle = laplacian_of(&x, mst_sigma(&x, scale).unwrap()).unwrap();
        let l = &bundle.laplacian;
        prop_assert!((l - l.transpose()).amax() <= 1e-14);
        let eig = SymmetricEigen::new(l.clone()).eigenvalues;
        prop_assert!(eig.min() >= -1e-8 && eig.max() <= 2.0 + 1e-8);
        let u = bundle.null_vector();
        prop_assert!((l * &u).norm() <= 1e-8 * u.norm());
    }

    #[test]
    fn mst_matches_kruskal(x in points(8, 2)) {
        let prim = mst_max_edge(&x).unwrap();
        prop_assert_eq!(prim, kruskal_max_edge(&x));
    }

    #[test]
    fn extension_restricts_to_the_eigenvector(seed in any::<u64>(), n in 10usize..40, dim in 1usize..4) {
        let x = random_data(n, dim, seed);
        let sigma = mst_sigma(&x, 1.0).unwrap();
        let (ef, pair) = ExtendedEigenfunction::fit(x.clone(), sigma, ExtensionKernel::Normalized).unwrap();
        let f = ef.evaluate(&x).unwrap();
        let residual = (&laplacian_of(&x, sigma).unwrap().laplacian * &pair.vector - &pair.vector * pair.lambda).norm();
        prop_assert!(residual <= 1e-8);
        for (a, b) in f.iter().zip(pair.vector.iter()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        prop_assert_eq!(membership(&f), membership(pair.vector.as_slice()));
    }

    #[test]
    fn extension_is_linear(
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        u in prop::collection::vec(-1.0f64..1.0, 20),
        v in prop::collection::vec(-1.0f64..1.0, 20),
    ) {
        let x = random_data(20, 2, seed);
        let targets = random_data(15, 2, seed ^ 1);
        let sigma = mst_sigma(&x, 1.0).unwrap();
        let (ef, _) = ExtendedEigenfunction::fit(x, sigma, ExtensionKernel::Normalized).unwrap();
        let fu = extend(&ef.with_vector(u.clone()).unwrap(), &targets).unwrap();
        let fv = extend(&ef.with_vector(v.clone()).unwrap(), &targets).unwrap();
        let combo: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        let fc = extend(&ef.with_vector(combo).unwrap(), &targets).unwrap();
        for i in 0..targets.len() {
            prop_assert!((fc[i] - (a * fu[i] + b * fv[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn gauge_is_idempotent_and_partition_invariant(
        levels in prop::collection::vec(-1.0f64..1.0, 12),
        reference in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        prop_assume!(levels.iter().any(|&l| l != 0.0) && reference.iter().any(|&l| l != 0.0));
        let ctx = GaugeContext::new(reference, 1e-2).unwrap();
        let g = gauge_sign(&levels, &ctx).unwrap();
        let gauged: Vec<f64> = levels.iter().map(|l| l * g.sign).collect();
        prop_assert_eq!(gauge_sign(&gauged, &ctx).unwrap().sign, 1.0);

        let flipped: Vec<f64> = levels.iter().map(|l| -l).collect();
        let gf = gauge_sign(&flipped, &ctx).unwrap();
        let gauged_flip: Vec<f64> = flipped.iter().map(|l| l * gf.sign).collect();
        let partition = |v: &[f64]| {
            let a: Vec<usize> = (0..v.len()).filter(|&i| v[i] > 0.0).collect();
            let b: Vec<usize> = (0..v.len()).filter(|&i| v[i] < 0.0).collect();
            if a <= b { (a, b) } else { (b, a) }
        };
        prop_assert_eq!(partition(&gauged), partition(&gauged_flip));
    }

    #[test]
    fn odf_sign_matches_membership(seed in any::<u64>(), drop in 0usize..10) {
        let x = random_data(30, 2, seed);
        let sigma = mst_sigma(&x, 1.0).unwrap();
        let keep: Vec<Vec<f64>> = x.points().skip(drop).map(<[f64]>::to_vec).collect();
        let sample = DataSet::from_points(&keep).unwrap();
        let (_, reference) = ExtendedEigenfunction::fit(x.clone(), sigma, ExtensionKernel::Normalized).unwrap();
        let ctx = GaugeContext::new(reference.vector.as_slice().to_vec(), 1e-2).unwrap();
        let s = cluster_reference_under_sample(&x, &sample, sigma, &ctx, ExtensionKernel::Normalized).unwrap();
        prop_assume!(s.cardinality > 0 && s.cardinality < x.len());
        for i in 0..x.len() {
            prop_assert_eq!(s.odf[i] >= 0.0, s.membership[i]);
            prop_assert_eq!(s.levels[i] >= 0.0, s.odf[i] >= 0.0);
        }
    }

    #[test]
    fn coverage_moves_by_at_most_one_over_m(samples in memberships(6, 1..12), extra in prop::collection::vec(any::<bool>(), 6)) {
        let m = samples.len();
        let before = accumulate(vec![true; 6], &samples).coverage().unwrap();
        let mut more = samples.clone();
        more.push(extra);
        let after = accumulate(vec![true; 6], &more).coverage().unwrap();
        for (b, a) in before.iter().zip(&after) {
            prop_assert!((0.0..=1.0).contains(a));
            prop_assert!((a - b).abs() <= 1.0 / (m + 1) as f64 + 1e-15);
        }
    }

    #[test]
    fn vorobev_set_is_sandwiched_and_minimal(n in 1usize..=8, samples in (1usize..=6).prop_flat_map(|m| memberships(8, m))) {
        let samples: Vec<Vec<bool>> = samples.into_iter().map(|s| s[..n].to_vec()).collect();
        let report = finalize(&accumulate(vec![false; n], &samples)).unwrap();
        let t = report.t_star;
        for i in 0..n {
            let inside = report.vorobev_set.contains(&i);
            if report.coverage[i] > t {
                prop_assert!(inside);
            }
            if inside {
                prop_assert!(report.coverage[i] >= t);
            }
        }
        let chosen: u32 = report.vorobev_set.iter().map(|&i| 1 << i).sum();
        let best = (0u32..1 << n)
            .filter(|s| s.count_ones() as usize == report.vorobev_set.len())
            .map(|s| symdiff_total(&samples, s))
            .min()
            .unwrap();
        prop_assert_eq!(symdiff_total(&samples, chosen), best);
        prop_assert!(report.expected_misclustering_rate >= 0.0 && report.expected_misclustering_rate <= n as f64);
    }

    #[test]
    fn accumulation_order_does_not_matter(
        seed in any::<u64>(),
        samples in memberships(10, 2..20),
        scales in prop::collection::vec(0.01f64..10.0, 20),
        shuffle in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let ground = random_data(10, 2, seed);
        let build = |k: usize| {
            let m = samples[k].clone();
            let levels = m.iter().enumerate().map(|(i, &b)| (if b { 1.0 } else { -1.0 }) * scales[(i + k) % 20]).collect();
            let odf = odf_values(&m, &ground).unwrap();
            ClusterSample::new(m, levels, odf, k.is_multiple_of(3), false).unwrap()
        };
        let all: Vec<ClusterSample> = (0..samples.len()).map(build).collect();
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let reference = vec![true; 10];
        let mut a = Accumulator::new(reference.clone());
        let mut b = Accumulator::new(reference);
        for s in &all {
            a.accumulate(s).unwrap();
        }
        for &k in &order {
            b.accumulate(&all[k]).unwrap();
        }
        prop_assert_eq!(a.coverage_counts(), b.coverage_counts());
        prop_assert_eq!(a.symdiff_sum(), b.symdiff_sum());
        prop_assert_eq!(a.cardinality_sum(), b.cardinality_sum());
        prop_assert_eq!(a.warn_count(), b.warn_count());
        for i in 0..10 {
            prop_assert!((a.level_sums()[i] - b.level_sums()[i]).abs() <= 1e-10);
            prop_assert!((a.odf_sums()[i] - b.odf_sums()[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn zscore_standardizes_every_column(x in points(30, 3)) {
        prop_assume!((0..3).all(|c| {
            let col: Vec<f64> = x.points().map(|p| p[c]).collect();
            col.iter().any(|&v| (v - col[0]).abs() > 1e-3)
        }));
        let z = normalize(&x, Normalization::Zscore).unwrap();
        let n = z.len() as f64;
        for c in 0..3 {
            let mean = z.points().map(|p| p[c]).sum::<f64>() / n;
            let var = z.points().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((var.sqrt() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn corruption_accounts_for_every_point(seed in any::<u64>(), index in any::<u64>(), extra in 0usize..5, eps in 0.0f64..0.5) {
        let x = gen_point_in_circle(20, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let cfg = CorruptionConfig { noise_std: eps, additional_points: extra, master_seed: seed, ..CorruptionConfig::default() };
        let src = RegenerationSource::Generator { model: SyntheticModel::new(SyntheticKind::PointInCircle) };
        let s = corrupt(&x, &cfg, &src, index).unwrap();
        let survivors: Vec<usize> = s.origin.iter().filter_map(|o| match o { Origin::Survivor(i) => Some(*i), _ => None }).collect();
        let regenerated = s.origin.iter().filter(|o| matches!(o, Origin::Regenerated { .. })).count();
        let additional = s.origin.iter().filter(|o| matches!(o, Origin::Additional)).count();
        prop_assert_eq!(s.data.len(), survivors.len() + regenerated + additional);
        prop_assert_eq!(survivors.len() + regenerated, x.len());
        prop_assert_eq!(additional, extra);
        prop_assert!(survivors.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(s, corrupt(&x, &cfg, &src, index).unwrap());
    }
}

#[test]
fn deleted_fraction_averages_four_percent() {
    let x = gen_point_in_circle(100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let labels = x.labels().unwrap().to_vec();
    let sizes = [100.0, 200.0];
    let cfg = CorruptionConfig {
        master_seed: 8,
        ..CorruptionConfig::default()
    };
    let src = RegenerationSource::Generator {
        model: SyntheticModel::new(SyntheticKind::PointInCircle),
    };
    let samples = 10_000;
    let mut fraction_sum = [0.0; 2];
    for index in 0..samples {
        let s = corrupt(&x, &cfg, &src, index).unwrap();
        let mut deleted = [0.0; 2];
        for o in &s.origin {
            if let Origin::Regenerated { replaces } = o {
                deleted[(labels[*replaces] - 1) as usize] += 1.0;
            }
        }
        for c in 0..2 {
            fraction_sum[c] += deleted[c] / sizes[c];
        }
    }
    for sum in fraction_sum {
        let mean = sum / samples as f64;
        assert!((0.035..=0.045).contains(&mean), "mean deleted fraction {mean}");
    }
}

#[test]
fn identity_corruption_reproduces_reference_clustering() {
    let x = gen_point_in_circle(20, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let sigma = mst_sigma(&x, 1.0).unwrap();
    let pair = fiedler_pair(&laplacian_of(&x, sigma).unwrap()).unwrap();
    let ctx = GaugeContext::new(pair.vector.as_slice().to_vec(), 1e-2).unwrap();
    let src = RegenerationSource::Bootstrap;
    for index in 0..5 {
        let s = corrupt(&x, &CorruptionConfig::identity(), &src, index).unwrap();
        let c = cluster_reference_under_sample(&x, &s.data, sigma, &ctx, ExtensionKernel::Normalized).unwrap();
        assert_eq!(c.membership, membership(pair.vector.as_slice()));
    }
}
