use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::singular_values_desc;
use crate::moments::SigmaMatrix;
use crate::tensor_core::SymTensor;

/// Per-unit least squares `T̂_b = argmin Σ_{a≤d'} (S_ab − ⟨T̂_a, T̂⟩_Σ)²` over
/// symmetric tensors. `s(a, b)` reads pair moments for `a < d'`.
pub fn extend_tail_lr<F: Fn(usize, usize) -> f64>(s: F, sigma: &SigmaMatrix, head: &[SymTensor], d: usize) -> Result<Vec<SymTensor>> {
    let dp = head.len();
    if d < dp {
        return Err(Error::domain(format!("d = {d} is below the head size {dp}")));
    }
    if d == dp {
        return Ok(Vec::new());
    }
    let (r, omega) = (sigma.r(), sigma.omega());
    if head.iter().any(|t| t.r() != r || t.omega() != omega) {
        return Err(Error::domain("head tensors do not match Σ"));
    }
    let m = sigma.indices().len();
    let w = sigma.d_diag();
    // ⟨T_a, T⟩_Σ = (D Σ_sym D t_a)ᵀ t.
    let h = DMatrix::from_fn(dp, m, |a, k| {
        let wa = sigma.weighted(&head[a]);
        w[k] * (sigma.sym().row(k) * wa)[0]
    });
    let sv = singular_values_desc(&h);
    let smin = if dp >= m { sv[m - 1] } else { 0.0 };
    if smin <= 1e-12 * sv[0].max(f64::MIN_POSITIVE) {
        return Err(Error::degenerate(format!("head design has rank below C(r+ω−1,ω) = {m} (σ_min = {smin:.3e})")));
    }
    let chol = (h.transpose() * &h)
        .cholesky()
        .ok_or_else(|| Error::degenerate("head normal matrix is not positive definite"))?;
    (dp..d)
        .map(|b| {
            let rhs = DVector::from_fn(dp, |a, _| s(a, b));
            let t = chol.solve(&(h.transpose() * rhs));
            SymTensor::from_values(r, omega, t.iter().copied().collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::smoothed_lowrank_instance;
    use crate::moments::{sigma_inner, SigmaMode};

    fn setup(d: usize, seed: u64) -> (Vec<SymTensor>, SigmaMatrix, DMatrix<f64>) {
        let net = smoothed_lowrank_instance(2, d, 3, 1, 0.5, seed).unwrap();
        let sigma = SigmaMatrix::with_mode(2, 3, SigmaMode::Gaussian).unwrap();
        let ts: Vec<SymTensor> = (0..d).map(|a| net.unit_tensor(a).unwrap()).collect();
        let s = DMatrix::from_fn(d, d, |a, b| sigma_inner(&ts[a], &ts[b], &sigma).unwrap());
        (ts, sigma, s)
    }

    #[test]
    fn exact_head_gives_exact_tail() {
        let (ts, sigma, s) = setup(9, 3);
        let tail = extend_tail_lr(|a, b| s[(a, b)], &sigma, &ts[..4], 9).unwrap();
        for (k, t) in tail.iter().enumerate() {
            assert!(t.sub(&ts[4 + k]).unwrap().frobenius() <= 1e-8);
        }
        assert!(extend_tail_lr(|a, b| s[(a, b)], &sigma, &ts, 9).unwrap().is_empty());
    }

    #[test]
    fn duplicated_head_is_degenerate() {
        let (ts, sigma, s) = setup(6, 1);
        let head = vec![ts[0].clone(), ts[0].clone(), ts[1].clone(), ts[1].clone()];
        assert!(matches!(extend_tail_lr(|a, b| s[(a, b)], &sigma, &head, 6), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn error_is_linear_in_the_perturbation() {
        let (ts, sigma, s) = setup(7, 5);
        let err = |eta: f64| {
            let tail = extend_tail_lr(|a, b| s[(a, b)] + eta * (((a * 7 + b) % 5) as f64 - 2.0), &sigma, &ts[..4], 7).unwrap();
            tail.iter().zip(&ts[4..]).map(|(x, y)| x.sub(y).unwrap().frobenius()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-6), err(1e-4));
        assert!(e1 > 0.0 && ((e2 / e1) / 100.0 - 1.0).abs() <= 1e-3, "{e1} {e2}");
    }
}
