use nalgebra::DMatrix;

use super::network::PolyNetwork;
use super::seed::SeedDistribution;
use crate::error::{Error, Result};
use crate::rng::{domain, stream};

/// `n × d` matrix whose row `k` is the network evaluated at seed `x_k`.
/// Sample `k` draws from its own stream, so any prefix is reproducible.
pub fn sample(net: &PolyNetwork, seed: &SeedDistribution, n: usize, rng_seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::domain("sample count must be positive"));
    }
    let mut out = DMatrix::zeros(n, net.d());
    for k in 0..n {
        let mut rng = stream(rng_seed, domain::SAMPLE, k as u64);
        let x = seed.sample_point(net.r(), &mut rng);
        out.set_row(k, &net.evaluate(&x).transpose());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn identity_quadratic_mean_is_r() {
        let net = PolyNetwork::quadratic(vec![DMatrix::identity(4, 4)]).unwrap();
        let s = sample(&net, &SeedDistribution::Gaussian, 20_000, 11).unwrap();
        let mean = s.column(0).mean();
        assert!((mean - 4.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn cube_of_first_coordinate() {
        let net = PolyNetwork::lowrank(3, vec![vec![DVector::from_vec(vec![1.0, 0.0])]]).unwrap();
        let s = sample(&net, &SeedDistribution::Gaussian, 5, 4).unwrap();
        for k in 0..5 {
            let mut rng = stream(4, domain::SAMPLE, k as u64);
            let x = SeedDistribution::Gaussian.sample_point(2, &mut rng);
            assert!((s[(k, 0)] - x[0].powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let net = PolyNetwork::quadratic(vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -1.0])]).unwrap();
        let a = sample(&net, &SeedDistribution::Gaussian, 10, 3).unwrap();
        let b = sample(&net, &SeedDistribution::Gaussian, 4, 3).unwrap();
        assert_eq!(a.rows(0, 4), b);
        assert!(sample(&net, &SeedDistribution::Gaussian, 0, 3).is_err());
    }
}
