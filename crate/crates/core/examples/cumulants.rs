//! Joint cumulants of a diagonal quadratic network, against the empirical
//! third central moment.

use nalgebra::{DMatrix, DVector};
use polypush::model::{sample, PolyNetwork, SeedDistribution};
use polypush::moments::cumulant_diagonal;

fn main() -> polypush::error::Result<()> {
    let vs = vec![DVector::from_vec(vec![1.0, 0.5]), DVector::from_vec(vec![-0.3, 0.8])];
    let units: Vec<DMatrix<f64>> = (0..2).map(|a| DMatrix::from_diagonal(&DVector::from_fn(2, |i, _| vs[i][a]))).collect();
    let net = PolyNetwork::quadratic(units)?;
    let z = sample(&net, &SeedDistribution::Gaussian, 500_000, 3)?;
    let col = z.column(0);
    let mean = col.mean();
    let third = col.iter().map(|y| (y - mean).powi(3)).sum::<f64>() / col.len() as f64;
    for beta in [[1, 0], [2, 0], [1, 1], [3, 0], [2, 1]] {
        println!("kappa{beta:?} = {:.5}", cumulant_diagonal(&vs, &beta)?);
    }
    println!("empirical third central moment of output 0: {third:.4}");
    Ok(())
}
