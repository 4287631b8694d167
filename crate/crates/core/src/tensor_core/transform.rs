use nalgebra::DMatrix;

use super::symtensor::DenseTensor;
use super::DENSE_LIMIT;
use crate::error::{Error, Result};

/// `F_U(T) = ten(U · vec T)`.
pub fn apply_transform(u: &DMatrix<f64>, t: &DenseTensor) -> Result<DenseTensor> {
    let n = t.values.len();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::domain(format!(
            "transform is {}x{}, tensor has {n} entries",
            u.nrows(),
            u.ncols()
        )));
    }
    let out = u * t.vec();
    DenseTensor::new(t.r, t.omega, out.iter().copied().collect())
}

/// `V^{⊗ω}` as an explicit `r^ω × r^ω` matrix.
pub fn kron_power(v: &DMatrix<f64>, omega: usize) -> Result<DMatrix<f64>> {
    let side = (v.nrows() as u128).pow(omega as u32);
    if side * side > DENSE_LIMIT as u128 * 16 {
        return Err(Error::Resource(format!("Kronecker power of side {side} is too large")));
    }
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for _ in 0..omega {
        out = out.kronecker(v);
    }
    Ok(out)
}

/// `F_{V^{⊗ω}}(T)` computed mode by mode, without forming the Kronecker power.
pub fn rotate_dense(v: &DMatrix<f64>, t: &DenseTensor) -> Result<DenseTensor> {
    let r = t.r;
    if v.nrows() != r || v.ncols() != r {
        return Err(Error::domain("rotation dimension does not match tensor"));
    }
    let mut cur = t.values.clone();
    let n = cur.len();
    let mut next = vec![0.0; n];
    // Mode k has stride r^(ω-1-k) in row-major layout.
    let mut stride = n / r.max(1);
    for _ in 0..t.omega {
        let block = stride * r;
        for base in (0..n).step_by(block) {
            for off in 0..stride {
                for i in 0..r {
                    let mut acc = 0.0;
                    for j in 0..r {
                        acc += v[(i, j)] * cur[base + j * stride + off];
                    }
                    next[base + i * stride + off] = acc;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        stride /= r.max(1);
    }
    DenseTensor::new(r, t.omega, cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use crate::rng::{domain, stream};
    use crate::tensor_core::reshape::{mat, vec_matrix};
    use crate::tensor_core::ten;

    #[test]
    fn identity_transform() {
        let t = DenseTensor::new(2, 2, vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(apply_transform(&DMatrix::identity(4, 4), &t).unwrap(), t);
    }

    #[test]
    fn kron_square_is_conjugation() {
        let mut rng = stream(3, domain::PROBE, 0);
        let v = random_orthogonal(3, &mut rng);
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, -0.2, 0.5, 2.0, 0.3, -0.2, 0.3, -1.0]);
        let t = ten(&vec_matrix(&q), 3, 2).unwrap();
        let out = apply_transform(&kron_power(&v, 2).unwrap(), &t).unwrap();
        let expect = &v * &q * v.transpose();
        assert!((mat(&out.vec()).unwrap() - expect).amax() < 1e-12);
    }

    #[test]
    fn quarter_turn_swaps_diagonal() {
        // Oracle: explicit 4x4 product with V⊗V for V = [[0,-1],[1,0]].
        let v = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let u = kron_power(&v, 2).unwrap();
        let t = DenseTensor::new(2, 2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let out = apply_transform(&u, &t).unwrap();
        assert_eq!(out.values(), &[2.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn modewise_matches_kronecker() {
        let mut rng = stream(5, domain::PROBE, 1);
        let v = random_orthogonal(3, &mut rng);
        let t = DenseTensor::new(3, 3, (0..27).map(|k| (k as f64).sin()).collect()).unwrap();
        let a = rotate_dense(&v, &t).unwrap();
        let b = apply_transform(&kron_power(&v, 3).unwrap(), &t).unwrap();
        assert!(a.distance(&b) < 1e-12);
    }

    #[test]
    fn composition() {
        let mut rng = stream(9, domain::PROBE, 2);
        let u1 = DMatrix::from_fn(8, 8, |i, j| ((i * 3 + j) as f64).cos());
        let u2 = kron_power(&random_orthogonal(2, &mut rng), 3).unwrap();
        let t = DenseTensor::new(2, 3, (0..8).map(|k| k as f64).collect()).unwrap();
        let a = apply_transform(&(&u1 * &u2), &t).unwrap();
        let b = apply_transform(&u1, &apply_transform(&u2, &t).unwrap()).unwrap();
        assert!(a.distance(&b) < 1e-10);
    }

    #[test]
    fn mismatch_is_domain_error() {
        let t = DenseTensor::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(apply_transform(&DMatrix::identity(3, 3), &t), Err(Error::Domain(_))));
    }
}
