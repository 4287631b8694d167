use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::PolyNetwork;
use crate::moments::PairMomentTable;

fn check(coeffs: &[Vec<f64>], vectors: &[Vec<DVector<f64>>]) -> Result<()> {
    if coeffs.len() != vectors.len() || coeffs.iter().zip(vectors).any(|(c, v)| c.len() != v.len()) {
        return Err(Error::domain("coefficients and vectors must have the same shape"));
    }
    if vectors.iter().flatten().any(|v| (v.norm() - 1.0).abs() > 1e-8) {
        return Err(Error::domain("Hermite network directions must be unit vectors"));
    }
    Ok(())
}

/// `S_ab = Σ_{t,t'} λ_{a,t} λ_{b,t'} ⟨v_{a,t}, v_{b,t'}⟩^ω`, the identity-Σ
/// pair moments of `T_a = Σ_t λ_{a,t} v_{a,t}^{⊗ω}`.
pub fn hermite_network_pair_moments(coeffs: &[Vec<f64>], vectors: &[Vec<DVector<f64>>], omega: usize) -> Result<PairMomentTable> {
    check(coeffs, vectors)?;
    let d = coeffs.len();
    let s = DMatrix::from_fn(d, d, |a, b| {
        let mut acc = 0.0;
        for (la, va) in coeffs[a].iter().zip(&vectors[a]) {
            for (lb, vb) in coeffs[b].iter().zip(&vectors[b]) {
                acc += la * lb * va.dot(vb).powi(omega as i32);
            }
        }
        acc
    });
    PairMomentTable::new(s, 0.0)
}

/// The same units as a low-rank network. Needs odd `ω` when a coefficient is
/// negative, since the scale is absorbed as `λ^{1/ω} v`.
pub fn hermite_network(coeffs: &[Vec<f64>], vectors: &[Vec<DVector<f64>>], omega: usize) -> Result<PolyNetwork> {
    check(coeffs, vectors)?;
    if omega % 2 == 0 && coeffs.iter().flatten().any(|&c| c < 0.0) {
        return Err(Error::domain("negative coefficients need odd ω"));
    }
    let comps = coeffs
        .iter()
        .zip(vectors)
        .map(|(cs, vs)| cs.iter().zip(vs).map(|(&c, v)| v * (c.signum() * c.abs().powf(1.0 / omega as f64))).collect())
        .collect();
    PolyNetwork::lowrank(omega, comps)
}
