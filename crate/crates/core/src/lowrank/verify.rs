use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fvector::f_vector;
use crate::error::{Error, Result};
use crate::linalg::singular_values_desc;
use crate::model::PolyNetwork;
use crate::tensor_core::{binomial, SortedIndices};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerifyLimits {
    /// Largest column count of `K^{(e)}` that is materialized.
    pub max_cols: usize,
}

impl Default for VerifyLimits {
    fn default() -> Self {
        VerifyLimits { max_cols: 20_000 }
    }
}

/// Measured value against an optional predicted band, flagged when the
/// measurement reaches a tenth of the prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Band {
    pub measured: f64,
    pub predicted: Option<f64>,
    pub flag: Option<bool>,
}

impl Band {
    fn new(measured: f64, predicted: Option<f64>) -> Self {
        Band { measured, predicted, flag: predicted.map(|p| measured >= 0.1 * p) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrAssumptionReport {
    pub radius: f64,
    /// `σ_min(M*)`, rows are the sorted entries of each unit.
    pub sigma_m: Band,
    /// `σ_min(H)`, rows `(f_a)_i (f_a)_j` for `i ≤ j`.
    pub sigma_h: Band,
    /// `σ_min(K^{(e)})` for `e = ω(ℓ+1)`, when it fits.
    pub sigma_k: Option<Band>,
    /// `1/σ_min(K^{(e)})`, the θ it certifies.
    pub theta_bound: Option<f64>,
    pub notes: Vec<String>,
}

/// `σ_k` for `k = cols`, or 0 when there are fewer rows than columns.
fn sigma_at(m: &DMatrix<f64>) -> f64 {
    let cols = m.ncols();
    if m.nrows() < cols || cols == 0 {
        return 0.0;
    }
    singular_values_desc(m)[cols - 1]
}

/// Rows `(w_a^{⊗e})_sym` over sorted indices, weighted by `√multiplicity` so
/// each row has norm `‖w_a‖^e`.
pub fn symmetric_power_matrix(ws: &[DVector<f64>], e: usize) -> DMatrix<f64> {
    let n = ws.first().map_or(0, |w| w.len());
    let idx = SortedIndices::new(n, e);
    DMatrix::from_fn(ws.len(), idx.len(), |a, k| {
        let mono: f64 = idx.tuple(k).iter().map(|&i| ws[a][i]).product();
        mono * (idx.multiplicity(k) as f64).sqrt()
    })
}

pub fn verify_assumption_lr(net: &PolyNetwork, limits: &VerifyLimits) -> Result<LrAssumptionReport> {
    let comps = net.components().ok_or_else(|| Error::domain("assumption check needs a low-rank network"))?;
    let (r, d, omega) = (net.r(), net.d(), net.omega());
    let ell = comps[0].len();
    let tensors = (0..d).map(|a| net.unit_tensor(a)).collect::<Result<Vec<_>>>()?;
    let m = tensors[0].values().len();
    let mstar = DMatrix::from_fn(d, m, |a, k| tensors[a].values()[k]);
    let mut notes = Vec::new();
    if d < m {
        notes.push(format!("d = {d} is below C(r+ω−1,ω) = {m}; σ_min(M*) is 0"));
    }

    let rho = net.rho();
    let (kappa_pred, psi_pred) = match rho {
        Some(rho) => (
            Some((d as f64 * ell as f64).sqrt() * (rho * rho * omega as f64 / r as f64).powf(omega as f64 / 2.0)),
            Some((rho / (r as f64 * omega as f64)).powi(omega as i32)),
        ),
        None => (None, None),
    };

    let sigma_h = if omega % 2 == 1 {
        let fs = tensors.iter().map(f_vector).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..r).flat_map(|i| (i..r).map(move |j| (i, j))).collect();
        let h = DMatrix::from_fn(d, pairs.len(), |a, p| fs[a][pairs[p].0] * fs[a][pairs[p].1]);
        Band::new(sigma_at(&h), psi_pred)
    } else {
        notes.push("even ω: f-vectors and H are undefined".into());
        Band::new(0.0, None)
    };

    let e = omega * (ell + 1);
    let cols = binomial((r * ell + e - 1) as u64, e as u64);
    let (sigma_k, theta_bound) = if cols as usize <= limits.max_cols && cols <= usize::MAX as u64 {
        let ws: Vec<DVector<f64>> = comps
            .iter()
            .map(|unit| DVector::from_iterator(r * ell, unit.iter().flat_map(|v| v.iter().copied())))
            .collect();
        let k = symmetric_power_matrix(&ws, e);
        let s = sigma_at(&k);
        if (d as u64) < cols {
            notes.push(format!("K^({e}) has {cols} columns but only {d} rows; σ_min is 0"));
        }
        let pred = rho.map(|rho| (d as f64).sqrt() * (rho / (r as f64 * e as f64)).powi(e as i32));
        (Some(Band::new(s, pred)), (s > 0.0).then(|| 1.0 / s))
    } else {
        notes.push(format!("K^({e}) check skipped: {cols} columns exceed the cap of {}", limits.max_cols));
        (None, None)
    };

    Ok(LrAssumptionReport {
        radius: net.radius(),
        sigma_m: Band::new(sigma_at(&mstar), kappa_pred),
        sigma_h,
        sigma_k,
        theta_bound,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::smoothed_lowrank_instance;

    #[test]
    fn scaled_basis_by_hand() {
        // ℓ=1, ω=3, r=2, d=3: units (2e₁)^⊗3, (3e₂)^⊗3 and (e₁+e₂)^⊗3.
        let comps = vec![
            vec![DVector::from_vec(vec![2.0, 0.0])],
            vec![DVector::from_vec(vec![0.0, 3.0])],
            vec![DVector::from_vec(vec![1.0, 1.0])],
        ];
        let net = PolyNetwork::lowrank(3, comps).unwrap();
        let rep = verify_assumption_lr(&net, &VerifyLimits::default()).unwrap();
        // f_a = ‖v‖² v: (8,0), (0,27), (2,2); rows of H are (f₁², f₁f₂, f₂²).
        let h = DMatrix::from_row_slice(3, 3, &[64.0, 0.0, 0.0, 0.0, 0.0, 729.0, 4.0, 4.0, 4.0]);
        let expected = singular_values_desc(&h)[2];
        assert!((rep.sigma_h.measured - expected).abs() <= 1e-9 * expected.max(1.0));
        assert_eq!(rep.sigma_m.measured, 0.0);
        assert!(rep.sigma_m.flag.is_none());
    }

    #[test]
    fn duplicated_units_have_zero_sigma() {
        let v = DVector::from_vec(vec![0.4, -0.9]);
        let net = PolyNetwork::lowrank(3, vec![vec![v.clone()]; 6]).unwrap();
        let rep = verify_assumption_lr(&net, &VerifyLimits::default()).unwrap();
        assert!(rep.sigma_m.measured <= 1e-12);
    }

    #[test]
    fn k_check_respects_the_cap() {
        let net = smoothed_lowrank_instance(2, 10, 3, 1, 0.5, 0).unwrap();
        let rep = verify_assumption_lr(&net, &VerifyLimits { max_cols: 3 }).unwrap();
        assert!(rep.sigma_k.is_none() && rep.notes.iter().any(|n| n.contains("skipped")));
        let rep = verify_assumption_lr(&net, &VerifyLimits::default()).unwrap();
        assert!(rep.sigma_k.unwrap().measured > 0.0);
    }

    #[test]
    fn smoothed_nets_have_positive_sigma_m() {
        for seed in 0..100 {
            let net = smoothed_lowrank_instance(2, 10, 3, 1, 0.5, seed).unwrap();
            let rep = verify_assumption_lr(&net, &VerifyLimits::default()).unwrap();
            assert!(rep.sigma_m.measured > 0.0, "seed {seed}");
        }
    }
}
