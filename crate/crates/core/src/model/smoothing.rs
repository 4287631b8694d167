//! Smoothed instances. Perturbations are scaled by `ρ/√r`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::network::{NetworkKind, PolyNetwork};
use crate::error::{Error, Result};
use crate::linalg::gaussian_vector;
use crate::rng::{domain, stream};

#[derive(Debug, Clone)]
pub struct SmoothingParams {
    pub rho: f64,
    pub base: PolyNetwork,
    pub seed: u64,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("ρ must be a nonnegative real, got {rho}")));
    }
    Ok(())
}

/// `Q*_a = Q̄_a + (ρ/√r) G_a`, `G_a` symmetric with i.i.d. N(0,1) upper triangle.
pub fn smooth_quadratic(params: &SmoothingParams) -> Result<PolyNetwork> {
    check_rho(params.rho)?;
    let units = params
        .base
        .quadratic_units()
        .ok_or_else(|| Error::domain("quadratic smoothing needs a quadratic base network"))?;
    let r = params.base.r();
    let scale = params.rho / (r as f64).sqrt();
    let out = units
        .iter()
        .enumerate()
        .map(|(a, q)| {
            let mut rng = stream(params.seed, domain::SMOOTH, a as u64);
            let mut g = DMatrix::zeros(r, r);
            for i in 0..r {
                for j in i..r {
                    let x: f64 = rng.sample(StandardNormal);
                    g[(i, j)] = x;
                    g[(j, i)] = x;
                }
            }
            q + g * scale
        })
        .collect();
    Ok(PolyNetwork::quadratic(out)?.with_rho(Some(params.rho)))
}

/// `v*_{a,t} = v̄_{a,t} + (ρ/√r) g_{a,t}`.
pub fn smooth_componentwise(params: &SmoothingParams) -> Result<PolyNetwork> {
    check_rho(params.rho)?;
    let NetworkKind::LowRank { omega, components } = params.base.kind() else {
        return Err(Error::domain("componentwise smoothing needs a low-rank base network"));
    };
    let r = params.base.r();
    let ell = components[0].len();
    let scale = params.rho / (r as f64).sqrt();
    let out: Vec<Vec<DVector<f64>>> = components
        .iter()
        .enumerate()
        .map(|(a, unit)| {
            unit.iter()
                .enumerate()
                .map(|(t, v)| {
                    let mut rng = stream(params.seed, domain::SMOOTH, (a * ell + t) as u64);
                    v + gaussian_vector(r, &mut rng) * scale
                })
                .collect()
        })
        .collect();
    Ok(PolyNetwork::lowrank(*omega, out)?.with_rho(Some(params.rho)))
}

/// Worst-case base: every unit equals `Id_r`, so the unsmoothed Gram matrix has rank one.
pub fn identical_quadratic_base(r: usize, d: usize) -> Result<PolyNetwork> {
    PolyNetwork::quadratic(vec![DMatrix::identity(r, r); d])
}

/// Worst-case base: every component equals `e₁`.
pub fn identical_lowrank_base(r: usize, d: usize, omega: usize, ell: usize) -> Result<PolyNetwork> {
    let mut e1 = DVector::zeros(r);
    e1[0] = 1.0;
    PolyNetwork::lowrank(omega, vec![vec![e1; ell]; d])
}

/// `ρ`-smoothing of [`identical_quadratic_base`].
pub fn smoothed_quadratic_instance(r: usize, d: usize, rho: f64, seed: u64) -> Result<PolyNetwork> {
    smooth_quadratic(&SmoothingParams { rho, base: identical_quadratic_base(r, d)?, seed })
}

/// `ρ`-componentwise smoothing of [`identical_lowrank_base`].
pub fn smoothed_lowrank_instance(r: usize, d: usize, omega: usize, ell: usize, rho: f64, seed: u64) -> Result<PolyNetwork> {
    smooth_componentwise(&SmoothingParams { rho, base: identical_lowrank_base(r, d, omega, ell)?, seed })
}
