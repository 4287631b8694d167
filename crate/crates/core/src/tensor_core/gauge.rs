//! Gauge group action and the gauge distance evaluator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{orthogonality_defect, random_orthogonal, sym_eigen_ascending};
use crate::model::{NetworkKind, PolyNetwork};
use crate::rng::{domain, stream};
use crate::tensor_core::SymTensor;

/// An element of `O(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeRotation {
    matrix: DMatrix<f64>,
}

impl GaugeRotation {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::domain("rotation must be square"));
        }
        let defect = orthogonality_defect(&matrix);
        if defect > 1e-10 {
            return Err(Error::domain(format!("matrix is not orthogonal (defect {defect:e})")));
        }
        Ok(GaugeRotation { matrix })
    }

    pub fn identity(r: usize) -> Self {
        GaugeRotation { matrix: DMatrix::identity(r, r) }
    }

    /// Haar-random element of `O(r)`.
    pub fn random(r: usize, seed: u64) -> Self {
        let mut rng = stream(seed, domain::GAUGE, u64::MAX);
        GaugeRotation { matrix: random_orthogonal(r, &mut rng) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn transpose(&self) -> Self {
        GaugeRotation { matrix: self.matrix.transpose() }
    }
}

/// Replace every unit by `F_{V^{⊗ω}}(T_a)`.
pub fn rotate_network(net: &PolyNetwork, v: &GaugeRotation) -> Result<PolyNetwork> {
    if v.dim() != net.r() {
        return Err(Error::domain(format!("rotation has dimension {}, network has r={}", v.dim(), net.r())));
    }
    let m = v.matrix();
    let out = match net.kind() {
        NetworkKind::Quadratic(units) => {
            PolyNetwork::quadratic(units.iter().map(|q| crate::linalg::symmetrize(&(m * q * m.transpose()))).collect())?
        }
        NetworkKind::LowRank { omega, components } => PolyNetwork::lowrank(
            *omega,
            components.iter().map(|u| u.iter().map(|c| m * c).collect()).collect(),
        )?,
    };
    Ok(out.with_rho(net.rho()))
}

#[derive(Debug, Clone)]
pub struct AlignConfig {
    /// Random restarts of the local refinement.
    pub restarts: usize,
    pub rng_seed: u64,
    /// Angular grid step for `r ≤ 2`.
    pub grid_step: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig { restarts: 8, rng_seed: 0, grid_step: 1e-3 }
    }
}

/// The pair of networks being aligned, in a form convenient for evaluation.
enum Problem<'a> {
    Quadratic { a: &'a [DMatrix<f64>], b: &'a [DMatrix<f64>] },
    LowRank { omega: usize, a: &'a [Vec<DVector<f64>>], b_tensors: Vec<SymTensor>, b_dense: Vec<Vec<f64>>, b_c: Vec<DMatrix<f64>> },
}

impl Problem<'_> {
    /// Per-unit distances `‖F_U(T_a) − T'_a‖_F`, evaluated directly.
    fn unit_distances(&self, u: &DMatrix<f64>) -> Vec<f64> {
        match self {
            Problem::Quadratic { a, b } => a.iter().zip(b.iter()).map(|(q, p)| (u * q * u.transpose() - p).norm()).collect(),
            Problem::LowRank { omega, a, b_tensors, .. } => a
                .iter()
                .zip(b_tensors)
                .map(|(unit, tb)| {
                    let rotated: Vec<DVector<f64>> = unit.iter().map(|v| u * v).collect();
                    let ta = SymTensor::from_components(&rotated, *omega).expect("valid components");
                    ta.sub(tb).expect("same shape").frobenius()
                })
                .collect(),
        }
    }

    fn max_objective(&self, u: &DMatrix<f64>) -> f64 {
        self.unit_distances(u).into_iter().fold(0.0, f64::max)
    }

    fn sumsq(&self, u: &DMatrix<f64>) -> f64 {
        self.unit_distances(u).iter().map(|x| x * x).sum()
    }

    /// Euclidean gradient of `sumsq` (up to terms constant on `O(r)`).
    fn sumsq_gradient(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let r = u.nrows();
        let mut g = DMatrix::zeros(r, r);
        match self {
            Problem::Quadratic { a, b } => {
                for (q, p) in a.iter().zip(b.iter()) {
                    let e = u * q * u.transpose() - p;
                    g += 4.0 * e * u * q;
                }
            }
            Problem::LowRank { omega, a, b_dense, .. } => {
                // ∂/∂U of −2⟨(Uv)^{⊗ω}, T'⟩ is −2ω T'(Uv,…,Uv,·) vᵀ.
                for (ua, tb) in a.iter().zip(b_dense) {
                    for v in ua {
                        let w = contract_all_but_one(tb, &(u * v), *omega);
                        g -= (2.0 * *omega as f64) * w * v.transpose();
                    }
                }
            }
        }
        g
    }

    /// Generic symmetric combinations that rotate as `U C Uᵀ`.
    fn alignment_targets(&self, weights: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        match self {
            Problem::Quadratic { a, b } => {
                let r = a[0].nrows();
                let mut ca = DMatrix::zeros(r, r);
                let mut cb = DMatrix::zeros(r, r);
                for ((q, p), w) in a.iter().zip(b.iter()).zip(weights) {
                    ca += q * *w;
                    cb += p * *w;
                }
                (ca, cb)
            }
            Problem::LowRank { omega, a, b_c, .. } => {
                let r = a[0][0].len();
                let mut ca = DMatrix::zeros(r, r);
                let mut cb = DMatrix::zeros(r, r);
                for ((ua, c), w) in a.iter().zip(b_c).zip(weights) {
                    ca += *w * components_alignment_matrix(ua, *omega, r);
                    cb += *w * c;
                }
                (ca, cb)
            }
        }
    }
}

/// A matrix that rotates as `U C Uᵀ`: `f fᵀ` from the paired contraction `f`
/// for odd `ω`, the order-2 paired contraction for even `ω`.
fn alignment_matrix(t: &SymTensor) -> Result<DMatrix<f64>> {
    let omega = t.omega();
    if omega % 2 == 1 {
        let f = DVector::from_column_slice(t.contract_pairs(omega / 2)?.values());
        Ok(&f * f.transpose())
    } else {
        t.contract_pairs(omega / 2 - 1)?.to_matrix()
    }
}

fn components_alignment_matrix(unit: &[DVector<f64>], omega: usize, r: usize) -> DMatrix<f64> {
    if omega % 2 == 1 {
        let f = unit.iter().fold(DVector::zeros(r), |acc, v| acc + v * v.norm_squared().powi((omega as i32 - 1) / 2));
        &f * f.transpose()
    } else {
        unit.iter().fold(DMatrix::zeros(r, r), |acc, v| acc + v * v.transpose() * v.norm_squared().powi(omega as i32 / 2 - 1))
    }
}

/// `T(x,…,x,·)` for a dense row-major order-`ω` tensor.
fn contract_all_but_one(t: &[f64], x: &DVector<f64>, omega: usize) -> DVector<f64> {
    let r = x.len();
    let mut cur = t.to_vec();
    for _ in 1..omega {
        cur = cur.chunks(r).map(|c| c.iter().zip(x.iter()).map(|(a, b)| a * b).sum()).collect();
    }
    DVector::from_vec(cur)
}

fn skew(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

/// Cayley retraction `U (I + tΩ/2)^{-1} (I − tΩ/2)`.
fn cayley(u: &DMatrix<f64>, omega: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let r = u.nrows();
    let id = DMatrix::<f64>::identity(r, r);
    let plus = &id + omega * (0.5 * t);
    let minus = &id - omega * (0.5 * t);
    let inv = plus.try_inverse().unwrap_or(id);
    u * inv * minus
}

/// Riemannian gradient descent of the sum-of-squares surrogate on `O(r)`.
fn refine(problem: &Problem<'_>, u0: DMatrix<f64>) -> DMatrix<f64> {
    let mut u = u0;
    let mut f = problem.sumsq(&u);
    let mut t = 1.0;
    for _ in 0..400 {
        let g = problem.sumsq_gradient(&u);
        let om = skew(&(u.transpose() * g));
        let gn = om.norm_squared();
        if gn < 1e-26 {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = cayley(&u, &om, t);
            let fc = problem.sumsq(&cand);
            if fc <= f - 1e-4 * t * gn {
                u = cand;
                f = fc;
                accepted = true;
                t *= 2.0;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    u
}

fn rotation2(theta: f64, reflect: bool) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    if reflect {
        m * DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
    } else {
        m
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-13 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

fn small_r_search(problem: &Problem<'_>, r: usize, step: f64) -> (f64, DMatrix<f64>) {
    if r == 1 {
        return [1.0, -1.0]
            .iter()
            .map(|&s| {
                let u = DMatrix::from_element(1, 1, s);
                (problem.max_objective(&u), u)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("two candidates");
    }
    let steps = (std::f64::consts::TAU / step).ceil() as usize;
    let mut best = (f64::INFINITY, DMatrix::identity(2, 2));
    for reflect in [false, true] {
        let vals: Vec<f64> = (0..steps).map(|k| problem.max_objective(&rotation2(k as f64 * step, reflect))).collect();
        // Refine the lowest few local minima of the grid.
        let mut minima: Vec<usize> = (0..steps)
            .filter(|&k| vals[k] <= vals[(k + steps - 1) % steps] && vals[k] <= vals[(k + 1) % steps])
            .collect();
        minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        for &k in minima.iter().take(6) {
            let theta = k as f64 * step;
            let (x, fx) = golden_section(|th| problem.max_objective(&rotation2(th, reflect)), theta - step, theta + step);
            let (x, fx) = if fx <= vals[k] { (x, fx) } else { (theta, vals[k]) };
            if fx < best.0 {
                best = (fx, rotation2(x, reflect));
            }
        }
    }
    best
}

/// Upper bound on `d_G(A, B) = min_U max_a ‖F_{U^{⊗ω}}(T_a) − T'_a‖_F`
/// together with the rotation attaining it.
pub fn gauge_distance(net_a: &PolyNetwork, net_b: &PolyNetwork, cfg: &AlignConfig) -> Result<(f64, GaugeRotation)> {
    if !net_a.same_shape(net_b) {
        return Err(Error::domain("networks differ in kind, r, d, ω or ℓ"));
    }
    let problem = match (net_a.kind(), net_b.kind()) {
        (NetworkKind::Quadratic(a), NetworkKind::Quadratic(b)) => Problem::Quadratic { a, b },
        (NetworkKind::LowRank { omega, components: a }, NetworkKind::LowRank { components: b, .. }) => {
            let b_tensors = b.iter().map(|u| SymTensor::from_components(u, *omega)).collect::<Result<Vec<_>>>()?;
            lowrank_problem(*omega, a, b_tensors)?
        }
        _ => unreachable!("same_shape checked kinds"),
    };
    align(&problem, net_a.r(), net_a.d(), cfg)
}

/// [`gauge_distance`] from a low-rank network to units given as tensors.
pub fn gauge_distance_to_tensors(net_a: &PolyNetwork, b: &[SymTensor], cfg: &AlignConfig) -> Result<(f64, GaugeRotation)> {
    let NetworkKind::LowRank { omega, components: a } = net_a.kind() else {
        return Err(Error::domain("tensor targets need a low-rank network"));
    };
    if b.len() != a.len() || b.iter().any(|t| t.r() != net_a.r() || t.omega() != *omega) {
        return Err(Error::domain("target tensors do not match the network shape"));
    }
    let problem = lowrank_problem(*omega, a, b.to_vec())?;
    align(&problem, net_a.r(), net_a.d(), cfg)
}

fn lowrank_problem(omega: usize, a: &[Vec<DVector<f64>>], b_tensors: Vec<SymTensor>) -> Result<Problem<'_>> {
    let b_dense = b_tensors.iter().map(|t| t.to_dense().map(|d| d.values().to_vec())).collect::<Result<Vec<_>>>()?;
    let b_c = b_tensors.iter().map(alignment_matrix).collect::<Result<Vec<_>>>()?;
    Ok(Problem::LowRank { omega, a, b_tensors, b_dense, b_c })
}

fn align(problem: &Problem<'_>, r: usize, d: usize, cfg: &AlignConfig) -> Result<(f64, GaugeRotation)> {
    if r <= 2 {
        let (_dist, u) = small_r_search(problem, r, cfg.grid_step);
        let u = crate::linalg::orthonormalize(&u);
        return Ok((problem.max_objective(&u), GaugeRotation { matrix: u }));
    }

    let mut candidates: Vec<DMatrix<f64>> = vec![DMatrix::identity(r, r)];
    let mut rng = stream(cfg.rng_seed, domain::GAUGE, 0);
    let weights: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
    let (ca, cb) = problem.alignment_targets(&weights);
    let (_, pa) = sym_eigen_ascending(&ca);
    let (_, pb) = sym_eigen_ascending(&cb);
    let patterns: Vec<u64> = if r <= 12 {
        (0..(1u64 << r)).collect()
    } else {
        (0..4096).map(|_| rng.random()).collect()
    };
    for bits in patterns {
        let signs = DMatrix::from_diagonal(&DVector::from_fn(r, |k, _| if bits >> k & 1 == 1 { -1.0 } else { 1.0 }));
        candidates.push(&pb * signs * pa.transpose());
    }
    let mut scored: Vec<(f64, DMatrix<f64>)> = candidates.into_iter().map(|u| (problem.max_objective(&u), u)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.truncate(4);
    for k in 0..cfg.restarts {
        let mut rr = stream(cfg.rng_seed, domain::GAUGE, k as u64 + 1);
        let u = random_orthogonal(r, &mut rr);
        scored.push((problem.max_objective(&u), u));
    }
    let mut best = (f64::INFINITY, DMatrix::identity(r, r));
    for (f0, u0) in scored {
        if f0 < best.0 {
            best = (f0, u0.clone());
        }
        let u = crate::linalg::orthonormalize(&refine(problem, u0));
        let f = problem.max_objective(&u);
        if f < best.0 {
            best = (f, u);
        }
    }
    Ok((best.0, GaugeRotation { matrix: best.1 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::{kron_power, rotate_dense};

    fn quad(r: usize, d: usize, seed: u64) -> PolyNetwork {
        let mut rng = stream(seed, domain::PROBE, 0);
        let units = (0..d)
            .map(|_| {
                let g = DMatrix::from_fn(r, r, |_, _| rng.random_range(-1.0..1.0));
                (&g + g.transpose()) * 0.5
            })
            .collect();
        PolyNetwork::quadratic(units).unwrap()
    }

    fn lowrank(r: usize, d: usize, ell: usize, seed: u64) -> PolyNetwork {
        let mut rng = stream(seed, domain::PROBE, 1);
        let comps = (0..d)
            .map(|_| (0..ell).map(|_| DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0))).collect())
            .collect();
        PolyNetwork::lowrank(3, comps).unwrap()
    }

    #[test]
    fn rotation_validation() {
        assert!(GaugeRotation::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
        let v = GaugeRotation::random(4, 3);
        assert!(orthogonality_defect(v.matrix()) <= 1e-10);
    }

    #[test]
    fn identity_rotation_leaves_network() {
        let n = quad(3, 4, 1);
        assert_eq!(rotate_network(&n, &GaugeRotation::identity(3)).unwrap(), n);
    }

    #[test]
    fn rotation_preserves_trace_products() {
        let n = quad(4, 3, 2);
        let m = rotate_network(&n, &GaugeRotation::random(4, 9)).unwrap();
        let (a, b) = (n.quadratic_units().unwrap(), m.quadratic_units().unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert!(((&a[i] * &a[j]).trace() - (&b[i] * &b[j]).trace()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lowrank_rotation_matches_dense_expansion() {
        // Oracle: brute-force V^{⊗3} applied to the expanded tensor, r=2, ℓ=2.
        let n = lowrank(2, 2, 2, 4);
        let v = GaugeRotation::random(2, 5);
        let m = rotate_network(&n, &v).unwrap();
        let k = kron_power(v.matrix(), 3).unwrap();
        for a in 0..2 {
            let lhs = m.unit_dense(a).unwrap();
            let rhs = crate::tensor_core::apply_transform(&k, &n.unit_dense(a).unwrap()).unwrap();
            assert!(lhs.distance(&rhs) < 1e-12);
            assert!(rotate_dense(v.matrix(), &n.unit_dense(a).unwrap()).unwrap().distance(&lhs) < 1e-12);
        }
    }

    #[test]
    fn distance_to_self_is_zero() {
        let n = quad(3, 5, 3);
        let (dist, _) = gauge_distance(&n, &n, &AlignConfig::default()).unwrap();
        assert!(dist <= 1e-10);
    }

    #[test]
    fn distance_to_rotated_copy() {
        for (r, seed) in [(2usize, 1u64), (3, 2), (5, 3)] {
            let n = quad(r, 6, seed);
            let m = rotate_network(&n, &GaugeRotation::random(r, seed + 10)).unwrap();
            let (dist, u) = gauge_distance(&n, &m, &AlignConfig::default()).unwrap();
            assert!(dist <= 1e-8, "r={r} dist={dist}");
            assert!(orthogonality_defect(u.matrix()) <= 1e-10);
        }
        let n = lowrank(3, 4, 2, 7);
        let m = rotate_network(&n, &GaugeRotation::random(3, 1)).unwrap();
        let (dist, _) = gauge_distance(&n, &m, &AlignConfig::default()).unwrap();
        assert!(dist <= 1e-8, "lowrank dist={dist}");
    }

    #[test]
    fn one_dimensional_sign_flip() {
        // O(1) = {±1} fixes every quadratic, so [1] vs [-1] stays at distance 2.
        let a = PolyNetwork::quadratic(vec![DMatrix::from_element(1, 1, 1.0)]).unwrap();
        let b = PolyNetwork::quadratic(vec![DMatrix::from_element(1, 1, -1.0)]).unwrap();
        let (dist, _) = gauge_distance(&a, &b, &AlignConfig::default()).unwrap();
        assert!((dist - 2.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = quad(2, 3, 11);
        let b = quad(2, 3, 12);
        let cfg = AlignConfig::default();
        let (dab, _) = gauge_distance(&a, &b, &cfg).unwrap();
        let (dba, _) = gauge_distance(&b, &a, &cfg).unwrap();
        assert!((dab - dba).abs() < 1e-6, "{dab} {dba}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(gauge_distance(&quad(2, 3, 1), &quad(2, 4, 1), &AlignConfig::default()).is_err());
    }
}
