//! Build a smoothed quadratic network, sample it and compare empirical moments
//! with the exact ones.

use polypush::model::{sample, smoothed_quadratic_instance, w1_upper_bound, SeedDistribution};
use polypush::moments::{estimate_quadratic_moments, exact_quadratic_moments};

fn main() -> polypush::error::Result<()> {
    let net = smoothed_quadratic_instance(2, 4, 0.5, 7)?;
    let exact = exact_quadratic_moments(&net)?;
    let z = sample(&net, &SeedDistribution::Gaussian, 200_000, 1)?;
    let est = estimate_quadratic_moments(&z, 0.0, 0.05)?;

    println!("r={} d={} radius {:.3}", net.r(), net.d(), net.radius());
    println!("exact S:\n{:.4}", exact.s);
    println!("empirical S:\n{:.4}", est.s);
    println!("T_000 exact {:.4}, empirical {:.4}", exact.t(0, 0, 0), est.t(0, 0, 0));

    // Transport cost of a parameter error of 1e-3.
    println!("W1 bound for distance 1e-3: {:.3e}", w1_upper_bound(1e-3, 2, 4, 2, &SeedDistribution::Gaussian));
    Ok(())
}
