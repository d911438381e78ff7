//! Set-valued expectations of a random subset with known inclusion
//! probabilities: coverage function, Kovyazin (Vorob'ev) mean, and the
//! expected misclustering rate, estimated by Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_uq::estimators::{finalize, kovyazin_mean, odf_values, Accumulator, ClusterSample};
use spectral_uq::DataSet;

fn main() -> spectral_uq::Result<()> {
    let p = [0.9, 0.7, 0.5, 0.3, 0.1];
    let ground = DataSet::from_points(&[[0.0], [1.0], [2.0], [3.0], [4.0]])?;
    let reference = vec![true, true, false, false, false];

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut acc = Accumulator::new(reference);
    for _ in 0..100_000 {
        let membership: Vec<bool> = p.iter().map(|&pi| rng.random_bool(pi)).collect();
        let levels = membership.iter().map(|&m| if m { 1.0 } else { -1.0 }).collect();
        let odf = odf_values(&membership, &ground)?;
        acc.accumulate(&ClusterSample::new(membership, levels, odf, false, false)?)?;
    }
    let report = finalize(&acc)?;
    for (i, (c, pi)) in report.coverage.iter().zip(p).enumerate() {
        println!("point {i}: coverage {c:.4} (p = {pi})");
    }
    println!(
        "mean cardinality {:.4}, t* = {:.4}, Vorob'ev set {:?}",
        report.mean_cardinality, report.t_star, report.vorobev_set
    );
    println!("expected misclustering rate vs {{0, 1}}: {:.4}", report.expected_misclustering_rate);

    let analytic = kovyazin_mean(&p, p.iter().sum())?;
    println!("analytic: t* = {}, set {:?}", analytic.t_star, analytic.set);
    Ok(())
}
