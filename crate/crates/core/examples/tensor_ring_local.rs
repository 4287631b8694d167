//! Recover the units of a quadratic network from noisy second and third
//! moments with the local solver.

use polypush::model::smoothed_quadratic_instance;
use polypush::moments::exact_quadratic_moments;
use polypush::tensor_ring::{decompose, Backend, TRConfig};

fn main() -> polypush::error::Result<()> {
    let net = smoothed_quadratic_instance(2, 5, 0.5, 3)?;
    let cfg = TRConfig { backend: Backend::Local, rng_seed: 3, ..TRConfig::default() };
    for eta in [0.0, 1e-4, 1e-2] {
        let table = exact_quadratic_moments(&net)?.perturbed(eta, 11);
        let rep = decompose(&table, 2, &cfg, Some(&net))?;
        println!(
            "eta {eta:.0e}: d_G {:.3e}, residual {:.3e}, restarts {}",
            rep.gauge_distance.unwrap(),
            rep.max_residual(),
            rep.restarts_used
        );
    }
    Ok(())
}
