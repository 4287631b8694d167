use nalgebra::{DMatrix, DVector};

use super::chunked_sum;
use crate::error::{Error, Result};
use crate::model::PolyNetwork;
use crate::rng::{domain, stream};
use rand::Rng;

/// `μ_a ≈ Tr Q_a`, `S_ab ≈ Tr(Q_aQ_b)`, `T_abc ≈ Tr(Q_aQ_bQ_c)`, with noise budget `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticMomentTable {
    pub mu: DVector<f64>,
    pub s: DMatrix<f64>,
    /// Row-major `d × d × d`.
    t: Vec<f64>,
    pub eta: f64,
}

impl QuadraticMomentTable {
    pub fn new(mu: DVector<f64>, s: DMatrix<f64>, t: Vec<f64>, eta: f64) -> Result<Self> {
        let d = mu.len();
        if s.shape() != (d, d) || t.len() != d * d * d {
            return Err(Error::domain("moment table shapes are inconsistent"));
        }
        if !(eta >= 0.0) {
            return Err(Error::domain("η must be nonnegative"));
        }
        let mut out = QuadraticMomentTable { mu, s, t, eta };
        out.symmetrize();
        Ok(out)
    }

    pub fn d(&self) -> usize {
        self.mu.len()
    }

    pub fn t(&self, a: usize, b: usize, c: usize) -> f64 {
        let d = self.d();
        self.t[(a * d + b) * d + c]
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t
    }

    /// Restriction to the units in `idx` (in that order).
    pub fn restrict(&self, idx: &[usize]) -> QuadraticMomentTable {
        let k = idx.len();
        let mu = DVector::from_fn(k, |i, _| self.mu[idx[i]]);
        let s = DMatrix::from_fn(k, k, |i, j| self.s[(idx[i], idx[j])]);
        let mut t = vec![0.0; k * k * k];
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    t[(a * k + b) * k + c] = self.t(idx[a], idx[b], idx[c]);
                }
            }
        }
        QuadraticMomentTable { mu, s, t, eta: self.eta }
    }

    /// Copy with symmetric entrywise noise, uniform in `[−η, η]`, added to
    /// `μ`, `S` and `T`; the noise budget becomes `η`.
    pub fn perturbed(&self, eta: f64, seed: u64) -> QuadraticMomentTable {
        let d = self.d();
        let mut rng = stream(seed, domain::NOISE, 0);
        let noise = |rng: &mut crate::rng::StreamRng| if eta > 0.0 { rng.random_range(-eta..=eta) } else { 0.0 };
        let mut out = self.clone();
        for a in 0..d {
            out.mu[a] += noise(&mut rng);
        }
        for a in 0..d {
            for b in a..d {
                let e = noise(&mut rng);
                out.s[(a, b)] += e;
                if a != b {
                    out.s[(b, a)] += e;
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                for c in b..d {
                    let e = noise(&mut rng);
                    let mut perms = vec![(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)];
                    perms.sort_unstable();
                    perms.dedup();
                    for (x, y, z) in perms {
                        out.t[(x * d + y) * d + z] += e;
                    }
                }
            }
        }
        out.eta = eta;
        out
    }

    /// Enforce the symmetries of `S` and `T` by averaging.
    fn symmetrize(&mut self) {
        if self.s != self.s.transpose() {
            self.s = (&self.s + self.s.transpose()) * 0.5;
        }
        let d = self.d();
        let old = self.t.clone();
        let at = |a: usize, b: usize, c: usize| old[(a * d + b) * d + c];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let vals = [at(a, b, c), at(a, c, b), at(b, a, c), at(b, c, a), at(c, a, b), at(c, b, a)];
                    if vals.iter().any(|&v| v != vals[0]) {
                        self.t[(a * d + b) * d + c] = vals.iter().sum::<f64>() / 6.0;
                    }
                }
            }
        }
    }
}

/// Exact moments by matrix products.
pub fn exact_quadratic_moments(net: &PolyNetwork) -> Result<QuadraticMomentTable> {
    let units = net
        .quadratic_units()
        .ok_or_else(|| Error::domain("quadratic moments need a quadratic network"))?;
    let d = units.len();
    let mu = DVector::from_fn(d, |a, _| units[a].trace());
    let s = DMatrix::from_fn(d, d, |a, b| units[a].component_mul(&units[b]).sum());
    let mut t = vec![0.0; d * d * d];
    for a in 0..d {
        for b in a..d {
            let ab = &units[a] * &units[b];
            for c in b..d {
                let v = ab.component_mul(&units[c].transpose()).sum();
                for (x, y, z) in perms(a, b, c) {
                    t[(x * d + y) * d + z] = v;
                }
            }
        }
    }
    Ok(QuadraticMomentTable { mu, s, t, eta: 0.0 })
}

fn perms(a: usize, b: usize, c: usize) -> [(usize, usize, usize); 6] {
    [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
}

/// Centered estimators `Ŝ = ½·cov`, `T̂ = ⅛·third central moment`.
pub fn estimate_quadratic_moments(samples: &DMatrix<f64>, eta: f64, _delta: f64) -> Result<QuadraticMomentTable> {
    let (n, d) = samples.shape();
    if n == 0 {
        return Err(Error::domain("no samples"));
    }
    let nf = n as f64;
    let mu = DVector::from_fn(d, |a, _| chunked_sum(n, |k| samples[(k, a)]) / nf);
    let centered = DMatrix::from_fn(n, d, |k, a| samples[(k, a)] - mu[a]);
    let mut s = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = 0.5 * chunked_sum(n, |k| centered[(k, a)] * centered[(k, b)]) / nf;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    let mut t = vec![0.0; d * d * d];
    for a in 0..d {
        for b in a..d {
            for c in b..d {
                let v = 0.125 * chunked_sum(n, |k| centered[(k, a)] * centered[(k, b)] * centered[(k, c)]) / nf;
                for (x, y, z) in perms(a, b, c) {
                    t[(x * d + y) * d + z] = v;
                }
            }
        }
    }
    Ok(QuadraticMomentTable { mu, s, t, eta })
}

/// Sample size `⌈r³R⁶log³(2d/δ)/η²⌉` at which every entry is `η`-accurate with
/// probability `1−δ` (unit constant).
pub fn quadratic_sample_size(r: usize, radius: f64, d: usize, eta: f64, delta: f64) -> Result<u64> {
    if !(eta > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("need η > 0 and δ in (0,1)"));
    }
    let l = (2.0 * d as f64 / delta).ln();
    Ok(((r as f64).powi(3) * radius.powi(6) * l.powi(3) / (eta * eta)).ceil() as u64)
}
