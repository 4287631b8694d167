use nalgebra::DVector;

use crate::tensor_core::multiindex::factorial;

/// `E[⟨v,g⟩^ω ⟨w,g⟩^ω]` in closed form:
/// `ω! Σ_m C(ω; m, m, ω−2m) 4^{−m} ⟨v,w⟩^{ω−2m} ‖v‖^{2m} ‖w‖^{2m}`.
pub fn hermite_pair_moment(v: &DVector<f64>, w: &DVector<f64>, omega: usize) -> f64 {
    hermite_from_scalars(v.dot(w), v.norm_squared(), w.norm_squared(), omega)
}

/// Same as [`hermite_pair_moment`] from `⟨v,w⟩`, `‖v‖²`, `‖w‖²`.
pub fn hermite_from_scalars(vw: f64, vv: f64, ww: f64, omega: usize) -> f64 {
    let wf = factorial(omega as u64) as f64;
    let mut acc = 0.0;
    for m in 0..=omega / 2 {
        let coef = wf / (factorial(m as u64) as f64).powi(2) / factorial((omega - 2 * m) as u64) as f64;
        acc += coef * 0.25f64.powi(m as i32) * vw.powi((omega - 2 * m) as i32) * (vv * ww).powi(m as i32);
    }
    wf * acc
}

/// Partial derivatives of [`hermite_from_scalars`] with respect to
/// `(⟨v,w⟩, ‖v‖², ‖w‖²)`.
pub fn hermite_scalar_gradient(vw: f64, vv: f64, ww: f64, omega: usize) -> (f64, f64, f64) {
    let wf = factorial(omega as u64) as f64;
    let (mut d_vw, mut d_vv, mut d_ww) = (0.0, 0.0, 0.0);
    for m in 0..=omega / 2 {
        let coef = wf * wf / (factorial(m as u64) as f64).powi(2) / factorial((omega - 2 * m) as u64) as f64
            * 0.25f64.powi(m as i32);
        let p = (omega - 2 * m) as i32;
        let mi = m as i32;
        if p > 0 {
            d_vw += coef * p as f64 * vw.powi(p - 1) * (vv * ww).powi(mi);
        }
        if m > 0 {
            d_vv += coef * vw.powi(p) * mi as f64 * vv.powi(mi - 1) * ww.powi(mi);
            d_ww += coef * vw.powi(p) * mi as f64 * ww.powi(mi - 1) * vv.powi(mi);
        }
    }
    (d_vw, d_vv, d_ww)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{domain, stream};
    use rand::Rng;

    /// Wick's theorem by explicit enumeration of perfect matchings.
    fn wick(v: &DVector<f64>, w: &DVector<f64>, omega: usize) -> f64 {
        let items: Vec<&DVector<f64>> = (0..2 * omega).map(|k| if k < omega { v } else { w }).collect();
        fn go(rest: &mut Vec<usize>, items: &[&DVector<f64>]) -> f64 {
            if rest.is_empty() {
                return 1.0;
            }
            let first = rest.remove(0);
            let mut total = 0.0;
            for k in 0..rest.len() {
                let other = rest.remove(k);
                total += items[first].dot(items[other]) * go(rest, items);
                rest.insert(k, other);
            }
            rest.insert(0, first);
            total
        }
        go(&mut (0..2 * omega).collect(), &items)
    }

    #[test]
    fn low_order_closed_forms() {
        let v = DVector::from_vec(vec![1.0, 2.0, -0.5]);
        let w = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let (vw, vv, ww) = (v.dot(&w), v.norm_squared(), w.norm_squared());
        assert!((hermite_pair_moment(&v, &w, 1) - vw).abs() < 1e-12);
        assert!((hermite_pair_moment(&v, &w, 2) - (2.0 * vw * vw + vv * ww)).abs() < 1e-12);
        let e = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        for (omega, df) in [(1, 1.0), (2, 3.0), (3, 15.0), (4, 105.0), (5, 945.0)] {
            assert!((hermite_pair_moment(&e, &e, omega) - df).abs() < 1e-9);
        }
    }

    #[test]
    fn agrees_with_wick_enumeration() {
        let mut rng = stream(1, domain::PROBE, 0);
        for case in 0..100 {
            let r = 1 + case % 4;
            let omega = 1 + case % 5;
            let v = DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0));
            let w = DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0));
            let a = hermite_pair_moment(&v, &w, omega);
            let b = wick(&v, &w, omega);
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "ω={omega}: {a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (vw, vv, ww) = (0.3, 1.2, 0.7);
        for omega in 1..=5 {
            let g = hermite_scalar_gradient(vw, vv, ww, omega);
            let h = 1e-6;
            let f = |a: f64, b: f64, c: f64| hermite_from_scalars(a, b, c, omega);
            let fd = (
                (f(vw + h, vv, ww) - f(vw - h, vv, ww)) / (2.0 * h),
                (f(vw, vv + h, ww) - f(vw, vv - h, ww)) / (2.0 * h),
                (f(vw, vv, ww + h) - f(vw, vv, ww - h)) / (2.0 * h),
            );
            assert!((g.0 - fd.0).abs() < 1e-5 && (g.1 - fd.1).abs() < 1e-5 && (g.2 - fd.2).abs() < 1e-5);
        }
    }
}
