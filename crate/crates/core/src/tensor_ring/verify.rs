use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::singular_values_desc;
use crate::model::PolyNetwork;
use crate::tensor_core::binomial;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrAssumptionReport {
    pub radius: f64,
    /// `σ_m(M*)`, `m = C(r+1,2)`; zero when `d < m`.
    pub sigma_m: f64,
    pub d_below_m: bool,
    /// `ρ√(d/r)` when the network carries smoothing metadata.
    pub predicted_kappa: Option<f64>,
    /// Whether `σ_m ≥ 0.1·ρ√(d/r)`.
    pub kappa_flag: Option<bool>,
}

/// `M*` with rows the upper-triangular flattenings of the units.
pub fn unit_matrix(units: &[DMatrix<f64>]) -> DMatrix<f64> {
    let r = units[0].nrows();
    let m = r * (r + 1) / 2;
    DMatrix::from_fn(units.len(), m, |a, k| {
        let (mut i, mut rem) = (0, k);
        while rem >= r - i {
            rem -= r - i;
            i += 1;
        }
        units[a][(i, i + rem)]
    })
}

pub fn verify_assumption_tr(net: &PolyNetwork) -> Result<TrAssumptionReport> {
    let units = net.quadratic_units().ok_or_else(|| Error::domain("tensor-ring checks need a quadratic network"))?;
    let (r, d) = (net.r(), net.d());
    let m = binomial(r as u64 + 1, 2) as usize;
    let sv = singular_values_desc(&unit_matrix(units));
    let sigma_m = if d < m { 0.0 } else { sv[m - 1] };
    let predicted_kappa = net.rho().map(|rho| rho * (d as f64 / r as f64).sqrt());
    Ok(TrAssumptionReport {
        radius: net.radius(),
        sigma_m,
        d_below_m: d < m,
        predicted_kappa,
        kappa_flag: predicted_kappa.map(|k| sigma_m >= 0.1 * k),
    })
}
