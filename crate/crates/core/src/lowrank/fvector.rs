use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor_core::SymTensor;

/// `f_i = Σ_{j₁…j_k} T_{j₁j₁⋯j_kj_k i}` with `k = ⌊ω/2⌋`.
pub fn f_vector(t: &SymTensor) -> Result<DVector<f64>> {
    let omega = t.omega();
    if omega % 2 == 0 {
        return Err(Error::domain(format!("f-vectors need odd ω, got {omega}")));
    }
    Ok(DVector::from_column_slice(t.contract_pairs(omega / 2)?.values()))
}

/// `f` from components: `Σ_t ‖v_t‖^{ω−1} v_t`.
pub fn f_vector_components(unit: &[DVector<f64>], omega: usize) -> DVector<f64> {
    let r = unit.first().map_or(0, |v| v.len());
    unit.iter().fold(DVector::zeros(r), |acc, v| acc + v * v.norm_squared().powi((omega as i32 - 1) / 2))
}

/// `F_a = f_a f_aᵀ`.
pub fn f_matrices(fs: &[DVector<f64>]) -> Vec<DMatrix<f64>> {
    fs.iter().map(|f| f * f.transpose()).collect()
}

/// `Ĝ_ab = ⟨F_a, F_b⟩ = (f_a · f_b)²`.
pub fn f_gram(fs: &[DVector<f64>]) -> DMatrix<f64> {
    let d = fs.len();
    DMatrix::from_fn(d, d, |a, b| fs[a].dot(&fs[b]).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(r: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(r);
        v[i] = 1.0;
        v
    }

    #[test]
    fn basis_cube() {
        let t = SymTensor::from_components(&[e(3, 0)], 3).unwrap();
        assert_eq!(f_vector(&t).unwrap(), e(3, 0));
    }

    #[test]
    fn rank_one_cube_scales_by_norm_squared() {
        let v = DVector::from_vec(vec![0.3, -1.1, 0.7]);
        let t = SymTensor::from_components(std::slice::from_ref(&v), 3).unwrap();
        let f = f_vector(&t).unwrap();
        assert!((f - &v * v.norm_squared()).amax() <= 1e-12);
        let t5 = SymTensor::from_components(std::slice::from_ref(&v), 5).unwrap();
        let f5 = f_vector(&t5).unwrap();
        assert!((f5 - f_vector_components(&[v.clone()], 5)).amax() <= 1e-12);
    }

    #[test]
    fn linear() {
        let a = SymTensor::from_components(&[DVector::from_vec(vec![1.0, 2.0])], 3).unwrap();
        let b = SymTensor::from_components(&[DVector::from_vec(vec![-0.5, 0.25])], 3).unwrap();
        let sum = SymTensor::from_values(2, 3, a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect()).unwrap();
        assert_eq!(f_vector(&sum).unwrap(), f_vector(&a).unwrap() + f_vector(&b).unwrap());
    }

    #[test]
    fn even_order_rejected() {
        let t = SymTensor::zeros(2, 4);
        assert!(f_vector(&t).is_err());
    }
}
