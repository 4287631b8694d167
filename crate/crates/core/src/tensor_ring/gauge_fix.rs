use nalgebra::{DMatrix, DVector};

use super::combo::combine;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen_ascending, symmetrize};
use crate::model::PolyNetwork;
use crate::tensor_core::{rotate_network, GaugeRotation};

/// Rotation `U` with `U Q_λ Uᵀ` diagonal ascending and the first row of
/// `U Q_μ Uᵀ` nonnegative.
pub fn gauge_fix_rotation(units: &[DMatrix<f64>], lambda: &DVector<f64>, mu: &DVector<f64>) -> Result<DMatrix<f64>> {
    if units.is_empty() || lambda.len() != units.len() || mu.len() != units.len() {
        return Err(Error::domain("combination length must equal the number of units"));
    }
    let q_lambda = combine(units, lambda);
    let r = q_lambda.nrows();
    let (vals, mut vecs) = sym_eigen_ascending(&q_lambda);
    let tol = 1e-12 * q_lambda.amax().max(1.0);
    if let Some(w) = vals.as_slice().windows(2).find(|w| w[1] - w[0] <= tol) {
        return Err(Error::degenerate(format!("Q_λ has a repeated eigenvalue near {:.3e}", w[0])));
    }
    for j in 0..r {
        let (imax, _) = vecs.column(j).iamax_full();
        if vecs[(imax, j)] < 0.0 {
            let neg = -vecs.column(j);
            vecs.set_column(j, &neg);
        }
    }
    let q_mu = vecs.transpose() * combine(units, mu) * &vecs;
    let signs = DVector::from_fn(r, |j, _| if j == 0 || q_mu[(0, j)] >= 0.0 { 1.0 } else { -1.0 });
    Ok(DMatrix::from_diagonal(&signs) * vecs.transpose())
}

pub fn gauge_fix_units(units: &[DMatrix<f64>], lambda: &DVector<f64>, mu: &DVector<f64>) -> Result<(Vec<DMatrix<f64>>, DMatrix<f64>)> {
    let u = gauge_fix_rotation(units, lambda, mu)?;
    let fixed = units.iter().map(|q| symmetrize(&(&u * q * u.transpose()))).collect();
    Ok((fixed, u))
}

/// Canonical representative of the gauge orbit of a quadratic network.
pub fn gauge_fix(net: &PolyNetwork, lambda: &DVector<f64>, mu: &DVector<f64>) -> Result<(PolyNetwork, GaugeRotation)> {
    let units = net.quadratic_units().ok_or_else(|| Error::domain("gauge fixing needs a quadratic network"))?;
    let u = GaugeRotation::new(gauge_fix_rotation(units, lambda, mu)?)?;
    Ok((rotate_network(net, &u)?, u))
}
