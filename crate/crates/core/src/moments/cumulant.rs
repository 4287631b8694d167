use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::tensor_core::multiindex::factorial;

/// Joint cumulant `κ_β` of a diagonal quadratic network, where `v_i ∈ R^d`
/// collects the `i`-th diagonal entries of all units.
///
/// The cumulant generating function is `−½ Σ_i log(1 − 2⟨t, v_i⟩)`; its
/// `t^β` coefficient is `C(|β|; β) 2^{|β|−1}/|β| Σ_i v_i^β`, and `κ_β` is
/// `β!` times that coefficient, i.e. `(|β|−1)! 2^{|β|−1} Σ_i Π_a (v_i)_a^{β_a}`.
pub fn cumulant_diagonal(vs: &[DVector<f64>], beta: &[usize]) -> Result<f64> {
    let order: usize = beta.iter().sum();
    if order == 0 {
        return Err(Error::domain("cumulant order |β| must be at least 1"));
    }
    if vs.iter().any(|v| v.len() != beta.len()) {
        return Err(Error::domain("β length must equal the number of units"));
    }
    let power_sum: f64 = vs
        .iter()
        .map(|v| beta.iter().enumerate().map(|(a, &b)| v[a].powi(b as i32)).product::<f64>())
        .sum();
    Ok(factorial(order as u64 - 1) as f64 * 2f64.powi(order as i32 - 1) * power_sum)
}
