//! Moment-matched pairs of one-dimensional quadratic transformations that are
//! statistically close but far apart in parameter space.
//!
//! The pair `(a, b)` should agree on the power sums `p_1 … p_{2r−1}` while
//! `a_i, b_i ∈ [i − ¼, i + ¼]` and `Σ(a_i − b_i)² = ¼`. The search minimizes
//! the power-sum mismatch over two parametrizations of that set. `literal`
//! uses `a_i = i + v_i/4`, `b_i = i − v_i/4` with `v` a unit vector.
//! `relaxed` moves the midpoints as well.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PolyNetwork;
use crate::moments::exact_quadratic_moments;
use crate::optim::{levenberg_marquardt, LeastSquares, LmConfig};
use crate::rng::{domain, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parametrization {
    Literal,
    Relaxed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub r: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `Σ_{ℓ<2r} (p_ℓ(a) − p_ℓ(b))²`.
    pub residual: f64,
    /// `Σ (a_i − b_i)²`.
    pub separation: f64,
}

impl MatchedPair {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let r = a.len();
        if r == 0 || b.len() != r {
            return Err(Error::domain("a and b must be nonempty and of equal length"));
        }
        for (i, (&x, &y)) in a.iter().zip(&b).enumerate() {
            let c = (i + 1) as f64;
            if (x - c).abs() > 0.25 + 1e-12 || (y - c).abs() > 0.25 + 1e-12 {
                return Err(Error::domain(format!("entry {i} leaves the box [{c} − ¼, {c} + ¼]")));
            }
        }
        let residual = power_sum_residual(&a, &b);
        let separation = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum();
        Ok(MatchedPair { r, a, b, residual, separation })
    }

    pub fn swapped(&self) -> MatchedPair {
        MatchedPair { a: self.b.clone(), b: self.a.clone(), ..self.clone() }
    }
}

fn power_sum(x: &[f64], l: i32) -> f64 {
    x.iter().map(|v| v.powi(l)).sum()
}

/// `Σ_{ℓ=1}^{2r−1} (p_ℓ(a) − p_ℓ(b))²`.
pub fn power_sum_residual(a: &[f64], b: &[f64]) -> f64 {
    let r = a.len() as i32;
    (1..2 * r).map(|l| (power_sum(a, l) - power_sum(b, l)).powi(2)).sum()
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub restarts: usize,
    pub tol: f64,
    pub rng_seed: u64,
    pub max_iter: usize,
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 50,
            tol: 1e-10,
            rng_seed: 0,
            max_iter: 500,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedSearch {
    /// Best pair over both parametrizations.
    pub pair: MatchedPair,
    pub parametrization: Parametrization,
    pub converged: bool,
    pub literal_residual: f64,
    pub relaxed_residual: f64,
}

struct PowerSums {
    r: usize,
    form: Parametrization,
}

impl PowerSums {
    fn pair(&self, x: &DVector<f64>) -> (Vec<f64>, Vec<f64>) {
        let r = self.r;
        let z = x.rows(0, r);
        let w = z / (2.0 * z.norm().max(1e-300));
        let mid: Vec<f64> = (0..r)
            .map(|i| {
                let c = (i + 1) as f64;
                match self.form {
                    Parametrization::Literal => c,
                    Parametrization::Relaxed => c + (0.25 - 0.5 * w[i].abs()) * x[r + i].tanh(),
                }
            })
            .collect();
        let a = (0..r).map(|i| mid[i] + 0.5 * w[i]).collect();
        let b = (0..r).map(|i| mid[i] - 0.5 * w[i]).collect();
        (a, b)
    }

    fn dim(&self) -> usize {
        match self.form {
            Parametrization::Literal => self.r,
            Parametrization::Relaxed => 2 * self.r,
        }
    }
}

impl LeastSquares for PowerSums {
    // Each difference is divided by ℓ·r^{ℓ−1}, the scale of its gradient.
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let (a, b) = self.pair(x);
        let r = self.r as f64;
        DVector::from_fn(2 * self.r - 1, |k, _| {
            let l = (k + 1) as i32;
            (power_sum(&a, l) - power_sum(&b, l)) / (l as f64 * r.powi(l - 1))
        })
    }
}

fn run_restart(r: usize, form: Parametrization, cfg: &SearchConfig, restart: usize) -> MatchedPair {
    let problem = PowerSums { r, form };
    let salt = match form {
        Parametrization::Literal => 0,
        Parametrization::Relaxed => 1u64 << 32,
    };
    let mut rng = stream(cfg.rng_seed, domain::LOWER_BOUND, salt + restart as u64);
    let x0 = DVector::from_fn(problem.dim(), |_, _| StandardNormal.sample(&mut rng));
    let lm = LmConfig { max_iter: cfg.max_iter, tol_cost: 1e-32, ..LmConfig::default() };
    let rep = levenberg_marquardt(&problem, x0, &lm);
    let (a, b) = problem.pair(&rep.x);
    MatchedPair::new(a, b).expect("parametrization stays in the box")
}

fn best_of(r: usize, form: Parametrization, cfg: &SearchConfig) -> MatchedPair {
    let threads = cfg.threads.clamp(1, cfg.restarts);
    let mut found: Vec<(usize, MatchedPair)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    (t..cfg.restarts).step_by(threads).map(|k| (k, run_restart(r, form, cfg, k))).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("search thread panicked")).collect()
    });
    found.sort_by_key(|(k, _)| *k);
    // First restart wins ties, so the result does not depend on the thread count.
    found
        .into_iter()
        .map(|(_, p)| p)
        .reduce(|best, p| if p.residual < best.residual { p } else { best })
        .expect("restarts ≥ 1")
}

/// Best matched pair over both parametrizations. A residual above `cfg.tol`
/// is reported through `converged`, not as an error.
pub fn search_matched_pair(r: usize, cfg: &SearchConfig) -> Result<MatchedSearch> {
    if r < 3 {
        return Err(Error::domain("matched-pair search needs r ≥ 3"));
    }
    if cfg.restarts == 0 || !(cfg.tol > 0.0) {
        return Err(Error::Configuration("restarts must be ≥ 1 and tol > 0".into()));
    }
    let literal = best_of(r, Parametrization::Literal, cfg);
    let relaxed = best_of(r, Parametrization::Relaxed, cfg);
    let (literal_residual, relaxed_residual) = (literal.residual, relaxed.residual);
    let (pair, parametrization) = if relaxed.residual < literal.residual {
        (relaxed, Parametrization::Relaxed)
    } else {
        (literal, Parametrization::Literal)
    };
    Ok(MatchedSearch { converged: pair.residual <= cfg.tol, pair, parametrization, literal_residual, relaxed_residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LBInstance {
    pub q1: DMatrix<f64>,
    pub q2: DMatrix<f64>,
}

impl LBInstance {
    /// The two one-dimensional quadratic networks.
    pub fn networks(&self) -> Result<(PolyNetwork, PolyNetwork)> {
        Ok((PolyNetwork::quadratic(vec![self.q1.clone()])?, PolyNetwork::quadratic(vec![self.q2.clone()])?))
    }
}

/// `diag(a₁, a₁, …, a_r, a_r, 1, 1, 1, −1, −1, −1)` and the `b` analogue.
pub fn build_networks(pair: &MatchedPair) -> LBInstance {
    let diag = |x: &[f64]| {
        let mut v: Vec<f64> = x.iter().flat_map(|&t| [t, t]).collect();
        v.extend([1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        DMatrix::from_diagonal(&DVector::from_vec(v))
    };
    LBInstance { q1: diag(&pair.a), q2: diag(&pair.b) }
}

/// Largest difference of `(μ, S, T)` between the two pushforwards.
pub fn moment_gap(inst: &LBInstance) -> Result<f64> {
    let (n1, n2) = inst.networks()?;
    let (m1, m2) = (exact_quadratic_moments(&n1)?, exact_quadratic_moments(&n2)?);
    Ok((m1.mu[0] - m2.mu[0]).abs().max((m1.s[(0, 0)] - m2.s[(0, 0)]).abs()).max((m1.t(0, 0, 0) - m2.t(0, 0, 0)).abs()))
}

/// `1/(1+4t²)³ · Π_j 1/(1+4x_j²t²)`.
pub fn char_transform(x: &[f64], t: f64) -> f64 {
    let t2 = 4.0 * t * t;
    x.iter().fold((1.0 + t2).powi(-3), |acc, v| acc / (1.0 + t2 * v * v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharGap {
    pub sup_gap: f64,
    pub analytic_bound: f64,
    /// `Π_j (a_j + b_{r+1−j})²`.
    pub denominator: f64,
    /// `r^{2r}`, which the denominator always exceeds.
    pub denominator_floor: f64,
}

pub fn char_gap(pair: &MatchedPair, t_grid: &[f64]) -> Result<CharGap> {
    if t_grid.is_empty() {
        return Err(Error::domain("empty t grid"));
    }
    let sup_gap = t_grid
        .iter()
        .map(|&t| (char_transform(&pair.a, t) - char_transform(&pair.b, t)).abs())
        .fold(0.0, f64::max);
    let r = pair.r;
    let pa: f64 = pair.a.iter().map(|v| v * v).product();
    let pb: f64 = pair.b.iter().map(|v| v * v).product();
    let denominator: f64 = (0..r).map(|j| (pair.a[j] + pair.b[r - 1 - j]).powi(2)).product();
    Ok(CharGap {
        sup_gap,
        analytic_bound: (pa - pb).abs() / denominator,
        denominator,
        denominator_floor: (r as f64).powi(2 * r as i32),
    })
}

/// Uniform grid on `[lo, hi]` with the given step, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// `min_π 2Σ_j |a_j − b_{π(j)}|`.
pub fn param_distance_lb(pair: &MatchedPair) -> f64 {
    // In one dimension the sorted matching is optimal for |·|.
    let mut a = pair.a.clone();
    let mut b = pair.b.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    2.0 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundFixture {
    pub r: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub residual: f64,
    pub sup_gap: f64,
    pub analytic_bound: f64,
    pub param_distance: f64,
}

/// Search, build and evaluate on `t ∈ [−10, 10]` with step `1e−3`.
pub fn lowerbound_fixture(r: usize, cfg: &SearchConfig) -> Result<(LowerBoundFixture, MatchedSearch)> {
    let search = search_matched_pair(r, cfg)?;
    let gap = char_gap(&search.pair, &uniform_grid(-10.0, 10.0, 1e-3))?;
    let p = &search.pair;
    let fixture = LowerBoundFixture {
        r,
        a: p.a.clone(),
        b: p.b.clone(),
        residual: p.residual,
        sup_gap: gap.sup_gap,
        analytic_bound: gap.analytic_bound,
        param_distance: param_distance_lb(p),
    };
    Ok((fixture, search))
}
