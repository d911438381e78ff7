//! Spectral bi-clustering of two Gaussian blobs: bandwidth from the minimum
//! spanning tree, normalized Laplacian, Fiedler pair, sign split.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spectral_uq::kernel::{laplacian_of, mst_sigma};
use spectral_uq::spectral::{bi_cluster, fiedler_pair};
use spectral_uq::DataSet;

fn main() -> spectral_uq::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<[f64; 2]> = (0..60)
        .map(|i| {
            let cx = if i < 30 { -3.0 } else { 3.0 };
            [
                cx + 0.7 * rng.sample::<f64, _>(StandardNormal),
                0.7 * rng.sample::<f64, _>(StandardNormal),
            ]
        })
        .collect();
    let x = DataSet::from_points(&points)?;

    let sigma = mst_sigma(&x, 1.0)?;
    let bundle = laplacian_of(&x, sigma)?;
    let pair = fiedler_pair(&bundle)?;
    let residual = (&bundle.laplacian * &pair.vector - &pair.vector * pair.lambda).norm();
    println!("sigma = {sigma:.4}");
    println!("lambda_2 = {:.6}, gap = {:.6}, residual = {residual:.2e}", pair.lambda, pair.gap);

    let split = bi_cluster(pair.vector.as_slice());
    let left_in_cluster = split.cluster.iter().filter(|&&i| i < 30).count();
    println!(
        "cluster: {} points ({} from the left blob), complement: {} points",
        split.cluster.len(),
        left_in_cluster,
        split.complement.len()
    );
    Ok(())
}
