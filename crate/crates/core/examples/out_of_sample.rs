//! Extending a Fiedler vector beyond the points it was computed on.
//!
//! The eigenvector of one half-circles sample is evaluated on a second,
//! independently drawn sample of different size. On its own source points
//! the extension reproduces the eigenvector exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_uq::datasets::gen_half_circles;
use spectral_uq::kernel::mst_sigma;
use spectral_uq::spectral::{gauge_sign, membership, ExtendedEigenfunction, ExtensionKernel, GaugeContext};

fn main() -> spectral_uq::Result<()> {
    let source = gen_half_circles(100, &mut ChaCha8Rng::seed_from_u64(3))?;
    let targets = gen_half_circles(160, &mut ChaCha8Rng::seed_from_u64(4))?;
    let sigma = mst_sigma(&source, 1.0)?;

    let (ef, pair) = ExtendedEigenfunction::fit(source.clone(), sigma, ExtensionKernel::Normalized)?;
    let on_source = ef.evaluate(&source)?;
    let err = on_source
        .iter()
        .zip(pair.vector.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("lambda_2 = {:.6}; max |f(x) - v_x| on the source = {err:.2e}", pair.lambda);

    // cluster the targets with their own eigenvector and with the extension
    let (own, _) = ExtendedEigenfunction::fit(targets.clone(), sigma, ExtensionKernel::Normalized)?;
    let ctx = GaugeContext::new(own.vector().to_vec(), 1e-2)?;
    let mut levels = ef.evaluate(&targets)?;
    let gauge = gauge_sign(&levels, &ctx)?;
    levels.iter_mut().for_each(|l| *l *= gauge.sign);
    let transferred = membership(&levels);
    let direct = membership(own.vector());
    let agree = transferred.iter().zip(&direct).filter(|(a, b)| a == b).count();
    println!(
        "gauge sign {:+}, cosine {:.3}; transferred clustering agrees on {agree} of {} target points",
        gauge.sign,
        gauge.cosine,
        targets.len()
    );

    let labels = targets.labels().expect("generator labels");
    let pure = (0..targets.len())
        .filter(|&i| transferred[i] == (labels[i] == labels[0]))
        .count();
    println!("agreement with the generating arcs: {} of {}", pure.max(targets.len() - pure), targets.len());
    Ok(())
}
