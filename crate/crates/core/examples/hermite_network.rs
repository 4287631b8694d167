//! Pair moments of a network whose outputs are sums of Hermite polynomials of
//! projections, against the moments of the matching tensor network.

use nalgebra::DVector;
use polypush::lowrank::{hermite_network, hermite_network_pair_moments};
use polypush::moments::{exact_pair_moments, SigmaMatrix, SigmaMode};
use polypush::model::SeedDistribution;

fn main() -> polypush::error::Result<()> {
    let v = |t: f64| DVector::from_vec(vec![t.cos(), t.sin()]);
    let coeffs = vec![vec![0.7, -1.2], vec![0.4, 0.9]];
    let vectors = vec![vec![v(0.3), v(1.9)], vec![v(-0.8), v(2.6)]];
    let hermite = hermite_network_pair_moments(&coeffs, &vectors, 3)?;
    println!("Hermite pair moments:\n{:.6}", hermite.s);

    // Under the identity weighting these are Frobenius inner products of the units.
    let net = hermite_network(&coeffs, &vectors, 3)?;
    let id = SigmaMatrix::with_mode(2, 3, SigmaMode::Identity)?;
    let gram = nalgebra::DMatrix::from_fn(2, 2, |a, b| {
        polypush::moments::sigma_inner(&net.unit_tensor(a).unwrap(), &net.unit_tensor(b).unwrap(), &id).unwrap()
    });
    println!("Frobenius Gram of the units:\n{gram:.6}");
    println!("Gaussian pair moments of the polynomial network:\n{:.6}", exact_pair_moments(&net, &SeedDistribution::Gaussian)?.s);
    Ok(())
}
