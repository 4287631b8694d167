//! vec / mat / ten reshapings in row-major lexicographic layout.

use nalgebra::{DMatrix, DVector};

use super::symtensor::DenseTensor;
use crate::error::{Error, Result};

/// Row-major vectorization of a matrix.
pub fn vec_matrix(m: &DMatrix<f64>) -> DVector<f64> {
    let (rows, cols) = m.shape();
    DVector::from_fn(rows * cols, |k, _| m[(k / cols, k % cols)])
}

/// Inverse of [`vec_matrix`] for square matrices.
pub fn mat(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = v.len();
    let r = (n as f64).sqrt().round() as usize;
    if r * r != n {
        return Err(Error::domain(format!("length {n} is not a perfect square")));
    }
    Ok(DMatrix::from_fn(r, r, |i, j| v[i * r + j]))
}

/// Tensorization of a length-`r^ω` vector.
pub fn ten(v: &DVector<f64>, r: usize, omega: usize) -> Result<DenseTensor> {
    DenseTensor::new(r, omega, v.iter().copied().collect())
}
