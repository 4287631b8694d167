use nalgebra::DMatrix;

use super::chunked_sum;
use super::hermite::hermite_pair_moment;
use super::rotation_invariant::rotation_invariant_scale;
use super::sigma::{sigma_inner, sigma_matrix};
use crate::error::{Error, Result};
use crate::model::{NetworkKind, PolyNetwork, SeedDistribution};

/// `S_ab ≈ ⟨T_a, T_b⟩_Σ = E[z_a z_b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMomentTable {
    pub s: DMatrix<f64>,
    pub eta: f64,
}

impl PairMomentTable {
    pub fn new(s: DMatrix<f64>, eta: f64) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::domain("pair moment matrix must be square"));
        }
        if !(eta >= 0.0) {
            return Err(Error::domain("η must be nonnegative"));
        }
        let s = if s == s.transpose() { s } else { (&s + s.transpose()) * 0.5 };
        Ok(PairMomentTable { s, eta })
    }

    pub fn d(&self) -> usize {
        self.s.nrows()
    }

    pub fn restrict(&self, idx: &[usize]) -> PairMomentTable {
        let k = idx.len();
        PairMomentTable { s: DMatrix::from_fn(k, k, |i, j| self.s[(idx[i], idx[j])]), eta: self.eta }
    }
}

/// Exact `E[z_a z_b]` under the given seed distribution.
pub fn exact_pair_moments(net: &PolyNetwork, seed: &SeedDistribution) -> Result<PairMomentTable> {
    let d = net.d();
    let mut s = DMatrix::zeros(d, d);
    match net.kind() {
        NetworkKind::LowRank { omega, components } => {
            let c = rotation_invariant_scale(seed, net.r(), 2 * *omega as u32)?;
            for a in 0..d {
                for b in a..d {
                    let mut acc = 0.0;
                    for v in &components[a] {
                        for w in &components[b] {
                            acc += hermite_pair_moment(v, w, *omega);
                        }
                    }
                    s[(a, b)] = c * acc;
                    s[(b, a)] = c * acc;
                }
            }
        }
        NetworkKind::Quadratic(_) => {
            let sigma = sigma_matrix(net.r(), 2, seed)?;
            let tensors = (0..d).map(|a| net.unit_tensor(a)).collect::<Result<Vec<_>>>()?;
            for a in 0..d {
                for b in a..d {
                    let v = sigma_inner(&tensors[a], &tensors[b], &sigma)?;
                    s[(a, b)] = v;
                    s[(b, a)] = v;
                }
            }
        }
    }
    Ok(PairMomentTable { s, eta: 0.0 })
}

/// `Ŝ_ab = (1/n) Σ_k z_{k,a} z_{k,b}`.
pub fn estimate_pair_moments(samples: &DMatrix<f64>, eta: f64, _delta: f64) -> Result<PairMomentTable> {
    let (n, d) = samples.shape();
    if n == 0 {
        return Err(Error::domain("no samples"));
    }
    let mut s = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = chunked_sum(n, |k| samples[(k, a)] * samples[(k, b)]) / n as f64;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    Ok(PairMomentTable { s, eta })
}

/// `⌈(ωr)^{2ω} R⁴ log^{2ω}(d/δ) / η²⌉` (unit constant), saturating.
pub fn pair_sample_size(r: usize, omega: usize, radius: f64, d: usize, eta: f64, delta: f64) -> Result<u64> {
    if !(eta > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("need η > 0 and δ in (0,1)"));
    }
    let l = (d.max(2) as f64 / delta).ln();
    let w = 2 * omega as i32;
    let n = ((omega * r) as f64).powi(w) * radius.powi(4) * l.powi(w) / (eta * eta);
    Ok(if n >= u64::MAX as f64 { u64::MAX } else { n.ceil() as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample;
    use nalgebra::DVector;

    #[test]
    fn estimator_converges_to_exact() {
        let net = PolyNetwork::lowrank(
            3,
            vec![vec![DVector::from_vec(vec![0.6, -0.8])], vec![DVector::from_vec(vec![0.5, 0.5])]],
        )
        .unwrap();
        let exact = exact_pair_moments(&net, &SeedDistribution::Gaussian).unwrap();
        let xs = sample(&net, &SeedDistribution::Gaussian, 1_000_000, 12).unwrap();
        let est = estimate_pair_moments(&xs, 0.0, 0.1).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((est.s[(a, b)] - exact.s[(a, b)]).abs() <= 0.02 * exact.s[(a, a)].max(exact.s[(b, b)]));
            }
        }
        assert_eq!(est.s, est.s.transpose());
    }

    #[test]
    fn scalar_sixth_moment() {
        let net = PolyNetwork::lowrank(3, vec![vec![DVector::from_vec(vec![1.0])]]).unwrap();
        assert!((exact_pair_moments(&net, &SeedDistribution::Gaussian).unwrap().s[(0, 0)] - 15.0).abs() < 1e-12);
        let xs = sample(&net, &SeedDistribution::Gaussian, 1_000_000, 3).unwrap();
        let est = estimate_pair_moments(&xs, 0.0, 0.1).unwrap();
        assert!((est.s[(0, 0)] - 15.0).abs() < 1.0);
    }

    #[test]
    fn quadratic_path_uses_sigma() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -0.3]);
        let net = PolyNetwork::quadratic(vec![q.clone()]).unwrap();
        let s = exact_pair_moments(&net, &SeedDistribution::Gaussian).unwrap();
        // E[(xᵀQx)²] = (Tr Q)² + 2 Tr(Q²).
        let expect = q.trace().powi(2) + 2.0 * (&q * &q).trace();
        assert!((s.s[(0, 0)] - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(estimate_pair_moments(&DMatrix::zeros(0, 3), 0.1, 0.1).is_err());
    }
}
