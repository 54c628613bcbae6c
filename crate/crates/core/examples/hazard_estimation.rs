//! Kernel-smoothed Nelson-Aalen hazard of heavy-tailed gaps next to the true
//! Generalized Pareto hazard and a constant-rate fit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use edgecache::hazard::{nelson_aalen, poisson_rate_estimate, BandwidthRule, ClosedFormHazard, KernelHazardEstimator};

fn main() -> edgecache::Result<()> {
    let (sigma, xi) = (1.0, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = Uniform::new(0.0f64, 1.0).expect("valid range");
    // Inverse CDF of the Generalized Pareto distribution.
    let gaps: Vec<f64> = (0..5000).map(|_| sigma / xi * ((1.0 - u.sample(&mut rng)).powf(-xi) - 1.0)).collect();

    let inc = nelson_aalen(&gaps)?;
    println!("{} distinct gaps, H(1) = {:.4}", inc.events.len(), inc.cumulative(1.0));

    let truth = ClosedFormHazard::GeneralizedPareto { sigma, xi };
    let rate = poisson_rate_estimate(&gaps)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "t", "true", "c=0.3", "c=1.0", "poisson");
    let narrow = KernelHazardEstimator::fit(&gaps, BandwidthRule { scale: 0.3, ..Default::default() })?;
    let wide = KernelHazardEstimator::fit(&gaps, BandwidthRule::default())?;
    for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
        println!("{t:>6} {:>10.4} {:>10.4} {:>10.4} {rate:>10.4}", truth.eval(t), narrow.eval(t), wide.eval(t));
    }
    Ok(())
}
