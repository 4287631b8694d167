use crate::error::{Error, Result};
use crate::model::{gaussian_norm_moment, SeedDistribution};

/// `C_{D,e} = E_D‖x‖^e / E_{χ²(r)}[ν^{e/2}]`: the factor by which degree-`e`
/// moments of a rotation-invariant seed exceed the Gaussian ones. Odd `e`
/// returns 0 since both moment families vanish there.
pub fn rotation_invariant_scale(seed: &SeedDistribution, r: usize, e: u32) -> Result<f64> {
    if e % 2 == 1 {
        return Ok(0.0);
    }
    if seed.is_gaussian() {
        return Ok(1.0);
    }
    let num = seed.norm_moment(r, e);
    if !(num.is_finite() && num > 0.0) {
        return Err(Error::Configuration(format!("radial moment E‖x‖^{e} unavailable or nonpositive ({num})")));
    }
    Ok(num / gaussian_norm_moment(r, e))
}
