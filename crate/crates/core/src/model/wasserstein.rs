use statrs::function::gamma::ln_gamma;

use super::seed::SeedDistribution;

/// `E ‖g‖^e` for `g ~ N(0, I_r)`: `2^{e/2} Γ((r+e)/2) / Γ(r/2)`.
pub fn gaussian_norm_moment(r: usize, e: u32) -> f64 {
    let r = r as f64;
    let e = e as f64;
    (0.5 * e * std::f64::consts::LN_2 + ln_gamma(0.5 * (r + e)) - ln_gamma(0.5 * r)).exp()
}

/// `W1` bound between two pushforwards whose parameters are `dist` apart:
/// `dist · √d · E‖x‖^ω`.
pub fn w1_upper_bound(dist: f64, r: usize, d: usize, omega: usize, seed: &SeedDistribution) -> f64 {
    if dist == 0.0 {
        return 0.0;
    }
    dist * (d as f64).sqrt() * seed.norm_moment(r, omega as u32)
}
