//! Factorize a low-rank cubic network from its pair moments and print the
//! canonical units.

use polypush::lowrank::{factorize, LRConfig};
use polypush::model::{smoothed_lowrank_instance, SeedDistribution};
use polypush::moments::exact_pair_moments;

fn main() -> polypush::error::Result<()> {
    let (r, d, omega, ell) = (2, 4, 3, 1);
    let net = smoothed_lowrank_instance(r, d, omega, ell, 0.5, 2)?;
    let table = exact_pair_moments(&net, &SeedDistribution::Gaussian)?;
    let cfg = LRConfig { rng_seed: 2, prior_rho: Some(0.5), ..LRConfig::default() };
    let rep = factorize(&table, r, omega, ell, &cfg, Some(&net))?;
    println!("d_G {:.3e}, residual {:.3e}, anchor {:?}", rep.gauge_distance.unwrap(), rep.residual, rep.anchor);
    for (a, u) in rep.units.iter().enumerate() {
        println!("unit {a}: {:?}", u.values().iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    }
    Ok(())
}
