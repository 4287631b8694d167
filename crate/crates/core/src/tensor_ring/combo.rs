use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_vector, sym_eigen_ascending};
use crate::rng::{domain, stream};
use crate::tensor_core::binomial;

/// Unit vectors whose combinations `Q_λ`, `Q_μ` break the gauge symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonDegenCombo {
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
    /// `(min eigengap of Q_λ, min |entry| of V Q_μ Vᵀ)` once measured on some units.
    pub upsilon: Option<(f64, f64)>,
}

impl NonDegenCombo {
    /// `min` of the two measured quantities, or `None` before measurement.
    pub fn min_upsilon(&self) -> Option<f64> {
        self.upsilon.map(|(g, e)| g.min(e))
    }
}

/// Randomized non-degenerate combinations from an approximate Gram matrix.
///
/// Keeps the top `m = C(r+1,2)` eigenpairs, forms `H̃ = UΣ''`, and mixes the
/// dual basis `H̃(H̃ᵀH̃)⁻¹` with independent Gaussian weights.
pub fn find_combo(g_hat: &DMatrix<f64>, r: usize, rng_seed: u64) -> Result<NonDegenCombo> {
    let d = g_hat.nrows();
    let m = binomial(r as u64 + 1, 2) as usize;
    if !g_hat.is_square() {
        return Err(Error::domain("Gram matrix must be square"));
    }
    if r == 0 || d < m {
        return Err(Error::domain(format!("d = {d} is below C(r+1,2) = {m}")));
    }
    let scale = g_hat.amax().max(1e-300);
    if (g_hat - g_hat.transpose()).amax() > 1e-9 * scale {
        return Err(Error::domain("Gram matrix is not symmetric"));
    }
    let (vals, vecs) = sym_eigen_ascending(&crate::linalg::symmetrize(g_hat));
    let top: Vec<usize> = (d - m..d).collect();
    if top.iter().any(|&k| !(vals[k] > 1e-12 * scale)) {
        return Err(Error::degenerate("Gram matrix has fewer than C(r+1,2) positive eigenvalues"));
    }
    let u = DMatrix::from_fn(d, m, |i, j| vecs[(i, top[j])]);
    let sq = DVector::from_fn(m, |j, _| vals[top[j]].sqrt());
    let h = DMatrix::from_fn(d, m, |i, j| u[(i, j)] * sq[j]);
    let hth = h.transpose() * &h;
    let w = &h * hth.try_inverse().ok_or_else(|| Error::degenerate("H̃ᵀH̃ is singular"))?;
    let mut rng = stream(rng_seed, domain::COMBO, 0);
    let g = gaussian_vector(m, &mut rng);
    let gp = gaussian_vector(m, &mut rng);
    let hv = &w * g;
    let hpv = &w * gp;
    Ok(NonDegenCombo { lambda: hv.normalize(), mu: hpv.normalize(), upsilon: None })
}

/// `Σ_a w_a Q_a`.
pub fn combine(units: &[DMatrix<f64>], w: &DVector<f64>) -> DMatrix<f64> {
    let r = units[0].nrows();
    units.iter().zip(w.iter()).fold(DMatrix::zeros(r, r), |acc, (q, &c)| acc + q * c)
}

/// Minimum eigengap of `Q_λ` and minimum `|entry|` of `Q_μ` in the eigenbasis of `Q_λ`.
pub fn validate_nondegeneracy(units: &[DMatrix<f64>], lambda: &DVector<f64>, mu: &DVector<f64>) -> Result<(f64, f64)> {
    if units.is_empty() || lambda.len() != units.len() || mu.len() != units.len() {
        return Err(Error::domain("combination length must equal the number of units"));
    }
    let (vals, vecs) = sym_eigen_ascending(&combine(units, lambda));
    let gap = vals.as_slice().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let gap = if gap.is_finite() { gap.max(0.0) } else { f64::INFINITY };
    let rotated = vecs.transpose() * combine(units, mu) * &vecs;
    Ok((gap, rotated.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()))))
}

/// Draw up to `tries` combos and keep the one whose measured `υ` on `units` is largest.
pub fn best_combo(g_hat: &DMatrix<f64>, units: &[DMatrix<f64>], r: usize, rng_seed: u64, tries: usize) -> Result<NonDegenCombo> {
    let mut best: Option<NonDegenCombo> = None;
    for t in 0..tries.max(1) {
        let mut c = find_combo(g_hat, r, rng_seed.wrapping_add(t as u64))?;
        c.upsilon = Some(validate_nondegeneracy(units, &c.lambda, &c.mu)?);
        if best.as_ref().is_none_or(|b| c.min_upsilon() > b.min_upsilon()) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one try"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::exact_quadratic_moments;
    use crate::model::{smoothed_quadratic_instance, PolyNetwork};

    #[test]
    fn outputs_unit_vectors() {
        let net = smoothed_quadratic_instance(2, 3, 0.5, 1).unwrap();
        let s = exact_quadratic_moments(&net).unwrap().s;
        let c = find_combo(&s, 2, 9).unwrap();
        assert!((c.lambda.norm() - 1.0).abs() <= 1e-10);
        assert!((c.mu.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn exact_low_rank_gram_is_reproduced() {
        let mut rng = stream(3, domain::SAMPLE, 0);
        let (d, m) = (5, 3);
        let h = DMatrix::from_fn(d, m, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let g = &h * diag * h.transpose();
        let (vals, vecs) = sym_eigen_ascending(&g);
        let ht = DMatrix::from_fn(d, m, |i, j| vecs[(i, d - m + j)] * vals[d - m + j].sqrt());
        assert!((&ht * ht.transpose() - &g).amax() <= 1e-9);
        assert!(find_combo(&g, 2, 0).is_ok());
    }

    #[test]
    fn rank_deficient_gram_is_degenerate() {
        let net = PolyNetwork::quadratic(vec![DMatrix::identity(2, 2); 3]).unwrap();
        let s = exact_quadratic_moments(&net).unwrap().s;
        assert!(matches!(find_combo(&s, 2, 0), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn eigengap_examples() {
        let units = vec![DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))];
        let one = DVector::from_element(1, 1.0);
        assert!((validate_nondegeneracy(&units, &one, &one).unwrap().0 - 1.0).abs() < 1e-12);
        let units = vec![DMatrix::identity(2, 2)];
        assert_eq!(validate_nondegeneracy(&units, &one, &one).unwrap().0, 0.0);
    }

    #[test]
    fn smoothed_nets_are_usually_nondegenerate() {
        let mut ok = 0;
        for seed in 0..60 {
            let net = smoothed_quadratic_instance(2, 3, 0.5, seed).unwrap();
            let units = net.quadratic_units().unwrap();
            let s = exact_quadratic_moments(&net).unwrap().s;
            let c = find_combo(&s, 2, seed).unwrap();
            let (g, e) = validate_nondegeneracy(units, &c.lambda, &c.mu).unwrap();
            ok += usize::from(g > 1e-4 && e > 1e-4);
        }
        assert!(ok >= 40, "{ok}/60");
    }
}
