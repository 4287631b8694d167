use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::fvector::{f_gram, f_matrices, f_vector_components};
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_ascending;
use crate::model::PolyNetwork;
use crate::moments::{PairMomentTable, SigmaMatrix, SigmaMode};
use crate::optim::{levenberg_marquardt, LeastSquares, LmConfig};
use crate::relaxation::{encode_lowrank, pseudo_expect, solve, LowRankEncoding, LowRankParams, Polynomial, Pseudoexpectation, SolveOutcome, SolverConfig};
use crate::rng::{domain, stream};
use crate::tensor_core::{binomial, gauge_distance, gauge_distance_to_tensors, AlignConfig, SymTensor};
use crate::tensor_ring::{best_combo, find_combo, gauge_fix_units, Backend, NonDegenCombo};

#[derive(Debug, Clone)]
pub struct LRConfig {
    pub backend: Backend,
    pub stage1_degree: usize,
    pub stage2_degree: usize,
    pub restarts: usize,
    pub tol: f64,
    pub rng_seed: u64,
    pub sigma_mode: SigmaMode,
    pub max_iter: usize,
    pub combo_tries: usize,
    /// Smoothing scale of the instance, when known: restarts then draw
    /// components around `e₁` with spread `ρ/√r`.
    pub prior_rho: Option<f64>,
    pub kappa: Option<f64>,
    pub radius: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for LRConfig {
    fn default() -> Self {
        LRConfig {
            backend: Backend::Local,
            stage1_degree: 6,
            stage2_degree: 6,
            restarts: 20,
            tol: 1e-12,
            rng_seed: 0,
            sigma_mode: SigmaMode::Gaussian,
            max_iter: 400,
            combo_tries: 1,
            prior_rho: None,
            kappa: None,
            radius: None,
            solver: SolverConfig::default(),
        }
    }
}

impl LRConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || !(self.tol > 0.0) {
            return Err(Error::Configuration("restarts must be ≥ 1 and tol > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LowRankReport {
    pub units: Vec<SymTensor>,
    /// Components behind `units`; the relaxation path only yields tensors.
    pub components: Option<Vec<Vec<DVector<f64>>>>,
    /// `max |⟨T̂_a, T̂_b⟩_Σ − S_ab|`.
    pub residual: f64,
    pub gauge_distance: Option<f64>,
    pub backend: Backend,
    pub iterations: usize,
    pub restarts_used: usize,
    pub combo: Option<NonDegenCombo>,
    /// `(a*, k*)`: the sorted entry whose sign anchors the others.
    pub anchor: Option<(usize, usize)>,
    pub notes: Vec<String>,
}

impl LowRankReport {
    pub fn network(&self) -> Option<Result<PolyNetwork>> {
        let omega = self.units.first()?.omega();
        self.components.as_ref().map(|c| PolyNetwork::lowrank(omega, c.clone()))
    }
}

/// `max |⟨T_a, T_b⟩_Σ − S_ab|`.
pub fn pair_residual(units: &[SymTensor], s: &DMatrix<f64>, sigma: &SigmaMatrix) -> f64 {
    let w: Vec<DVector<f64>> = units.iter().map(|t| sigma.weighted(t)).collect();
    let sw: Vec<DVector<f64>> = w.iter().map(|x| sigma.sym() * x).collect();
    let d = units.len();
    let mut out = 0.0f64;
    for a in 0..d {
        for b in a..d {
            out = out.max((w[a].dot(&sw[b]) - s[(a, b)]).abs());
        }
    }
    out
}

fn unpack(x: &DVector<f64>, d: usize, ell: usize, r: usize) -> Vec<Vec<DVector<f64>>> {
    (0..d)
        .map(|a| (0..ell).map(|t| DVector::from_fn(r, |i, _| x[(a * ell + t) * r + i])).collect())
        .collect()
}

fn pack(comps: &[Vec<DVector<f64>>]) -> DVector<f64> {
    DVector::from_iterator(
        comps.iter().map(|u| u.iter().map(|v| v.len()).sum::<usize>()).sum(),
        comps.iter().flatten().flat_map(|v| v.iter().copied()),
    )
}

struct PairProblem<'a> {
    d: usize,
    ell: usize,
    omega: usize,
    s: &'a DMatrix<f64>,
    sigma: &'a SigmaMatrix,
}

impl LeastSquares for PairProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = self.sigma.r();
        let comps = unpack(x, self.d, self.ell, r);
        let w: Vec<DVector<f64>> = comps
            .iter()
            .map(|u| self.sigma.weighted(&SymTensor::from_components(u, self.omega).expect("matching shapes")))
            .collect();
        let sw: Vec<DVector<f64>> = w.iter().map(|x| self.sigma.sym() * x).collect();
        let mut out = Vec::with_capacity(self.d * (self.d + 1) / 2);
        for a in 0..self.d {
            for b in a..self.d {
                out.push(w[a].dot(&sw[b]) - self.s[(a, b)]);
            }
        }
        DVector::from_vec(out)
    }
}

fn random_components(d: usize, ell: usize, r: usize, prior_rho: Option<f64>, seed: u64, restart: u64) -> Vec<Vec<DVector<f64>>> {
    let mut rng = stream(seed, domain::RESTART, restart);
    let mut draw = |scale: f64| DVector::from_fn(r, |_, _| { let g: f64 = StandardNormal.sample(&mut rng); scale * g });
    (0..d)
        .map(|_| {
            (0..ell)
                .map(|_| match prior_rho {
                    Some(rho) => {
                        let mut v = draw(rho / (r as f64).sqrt());
                        v[0] += 1.0;
                        v
                    }
                    None => draw(1.0 / (r as f64).sqrt()),
                })
                .collect()
        })
        .collect()
}

/// Rotate components so `F_λ = Σ λ_a f_a f_aᵀ` is diagonal ascending and the
/// first row of `F_μ` is nonnegative, then fix the remaining `±Id` by making
/// the largest-magnitude entry of the units positive.
pub fn canonicalize_components(comps: &[Vec<DVector<f64>>], omega: usize, combo: &NonDegenCombo) -> Result<(Vec<Vec<DVector<f64>>>, (usize, usize))> {
    let fs: Vec<DVector<f64>> = comps.iter().map(|u| f_vector_components(u, omega)).collect();
    let (_, u) = gauge_fix_units(&f_matrices(&fs), &combo.lambda, &combo.mu)?;
    let rotated: Vec<Vec<DVector<f64>>> = comps.iter().map(|unit| unit.iter().map(|v| &u * v).collect()).collect();
    sign_fix(rotated, omega)
}

fn anchor_of(units: &[SymTensor]) -> (usize, usize) {
    let mut best = (0, 0, -1.0);
    for (a, t) in units.iter().enumerate() {
        for (k, v) in t.values().iter().enumerate() {
            if v.abs() > best.2 {
                best = (a, k, v.abs());
            }
        }
    }
    (best.0, best.1)
}

fn sign_fix(comps: Vec<Vec<DVector<f64>>>, omega: usize) -> Result<(Vec<Vec<DVector<f64>>>, (usize, usize))> {
    let units = comps.iter().map(|u| SymTensor::from_components(u, omega)).collect::<Result<Vec<_>>>()?;
    let (a, k) = anchor_of(&units);
    if omega % 2 == 1 && units[a].values()[k] < 0.0 {
        return Ok((comps.into_iter().map(|u| u.into_iter().map(|v| -v).collect()).collect(), (a, k)));
    }
    Ok((comps, (a, k)))
}

struct LocalOutcome {
    comps: Vec<Vec<DVector<f64>>>,
    residual: f64,
    iterations: usize,
    restarts_used: usize,
}

fn local_backend(s: &DMatrix<f64>, sigma: &SigmaMatrix, ell: usize, cfg: &LRConfig) -> LocalOutcome {
    let (d, r, omega) = (s.nrows(), sigma.r(), sigma.omega());
    let problem = PairProblem { d, ell, omega, s, sigma };
    let lm = LmConfig { max_iter: cfg.max_iter, ..LmConfig::default() };
    let mut best: Option<(Vec<Vec<DVector<f64>>>, f64)> = None;
    let (mut iterations, mut used) = (0, 0);
    for restart in 0..cfg.restarts {
        used += 1;
        let x0 = pack(&random_components(d, ell, r, cfg.prior_rho, cfg.rng_seed, restart as u64));
        let rep = levenberg_marquardt(&problem, x0, &lm);
        iterations += rep.iterations;
        let comps = unpack(&rep.x, d, ell, r);
        let res = problem.residuals(&rep.x).amax();
        if best.as_ref().is_none_or(|(_, b)| res < *b) {
            best = Some((comps, res));
        }
        if res <= cfg.tol {
            break;
        }
    }
    let (comps, residual) = best.expect("restarts ≥ 1");
    LocalOutcome { comps, residual, iterations, restarts_used: used }
}

/// Default `R` and `κ` for the relaxations, read off `S` and Σ.
fn relaxation_bounds(s: &DMatrix<f64>, sigma: &SigmaMatrix) -> (f64, f64) {
    let (r, omega) = (sigma.r(), sigma.omega());
    let m = sigma.indices().len();
    let d = s.nrows();
    let w = sigma.d_diag();
    // ‖T‖²_F = tᵀDt and S_aa = (Dt)ᵀΣ_sym(Dt) ≥ λ_min(D^{1/2}Σ_symD^{1/2}) tᵀDt.
    let half = DMatrix::from_fn(m, m, |i, j| w[i].sqrt() * sigma.sym()[(i, j)] * w[j].sqrt());
    let lam_min = sym_eigen_ascending(&half).0[0].max(1e-12);
    let smax = (0..d).map(|a| s[(a, a)]).fold(0.0f64, f64::max);
    let radius = (1.01 * smax / lam_min).sqrt().max(1e-6);
    let gram = DMatrix::from_fn(m, m, |i, j| w[i] * sigma.sym()[(i, j)] * w[j]);
    let g_max = sym_eigen_ascending(&gram).0[m - 1].max(1e-12);
    let lam_m = sym_eigen_ascending(s).0[d - m].max(1e-12);
    let rw = (r as f64).powi(omega as i32);
    // ‖L*‖² ≤ m·λ_max(DΣD)/λ_m(S) and ‖P*‖² ≤ m/λ_m(S); keep a factor-2 margin.
    let k_l = (rw * lam_m / (m as f64 * g_max)).sqrt();
    let k_p = (rw * (omega as f64).powf(omega as f64 / 2.0) * lam_m / m as f64).sqrt();
    (radius, 0.5 * k_l.min(k_p))
}

fn solve_stage(params: &LowRankParams, solver: &SolverConfig, stage: &str) -> Result<(LowRankEncoding, Pseudoexpectation)> {
    let enc = encode_lowrank(params)?;
    match solve(&enc.program, solver)? {
        SolveOutcome::Feasible(pe) => Ok((enc, pe)),
        SolveOutcome::Infeasible { iterations, residual } => Err(Error::Convergence(format!(
            "{stage} relaxation reported infeasible after {iterations} iterations (residual {residual:.3e})"
        ))),
    }
}

struct SosOutcome {
    units: Vec<SymTensor>,
    combo: NonDegenCombo,
    anchor: (usize, usize),
    iterations: usize,
}

fn sos_backend(table: &PairMomentTable, sigma: &SigmaMatrix, ell: usize, cfg: &LRConfig) -> Result<SosOutcome> {
    let (r, omega, d) = (sigma.r(), sigma.omega(), table.d());
    let (radius, kappa) = relaxation_bounds(&table.s, sigma);
    let mut params = LowRankParams {
        r,
        omega,
        ell,
        s: table.s.clone(),
        sigma: sigma.clone(),
        combos: None,
        radius: cfg.radius.unwrap_or(radius),
        kappa: cfg.kappa.unwrap_or(kappa),
        eta: table.eta,
        degree: cfg.stage1_degree,
    };
    let (enc1, pe1) = solve_stage(&params, &cfg.solver, "stage-1")?;
    // Ĝ_ab = ⟨F_a, F_b⟩ with the inner product f_a·f_b read off the pseudo-moments.
    let mut g_hat = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let mut p = Polynomial::zero();
            for x in 0..r {
                p = p.add(&Polynomial::var(enc1.f_var(a, x)).mul(&Polynomial::var(enc1.f_var(b, x))));
            }
            let v = pseudo_expect(&pe1, &p)?.powi(2);
            g_hat[(a, b)] = v;
            g_hat[(b, a)] = v;
        }
    }
    let combo = find_combo(&g_hat, r, cfg.rng_seed)?;
    params.combos = Some((combo.lambda.clone(), combo.mu.clone()));
    params.degree = cfg.stage2_degree;
    let (enc2, pe2) = solve_stage(&params, &cfg.solver, "stage-2")?;

    let m = sigma.indices().len();
    let tv = |a: usize, k: usize| Polynomial::var(enc2.t_var(a, k));
    let mut mags = DMatrix::zeros(d, m);
    for a in 0..d {
        for k in 0..m {
            mags[(a, k)] = pseudo_expect(&pe2, &tv(a, k).mul(&tv(a, k)))?.max(0.0).sqrt();
        }
    }
    let (a0, k0) = mags.iamax_full();
    let mut units = Vec::with_capacity(d);
    for a in 0..d {
        let mut vals = Vec::with_capacity(m);
        for k in 0..m {
            let cross = pseudo_expect(&pe2, &tv(a, k).mul(&tv(a0, k0)))?;
            vals.push(if cross < 0.0 { -mags[(a, k)] } else { mags[(a, k)] });
        }
        units.push(SymTensor::from_values(r, omega, vals)?);
    }
    Ok(SosOutcome { units, combo, anchor: (a0, k0), iterations: pe1.iterations + pe2.iterations })
}

/// Recover rank-`ℓ` symmetric units `T_1…T_d` from `S_ab = ⟨T_a, T_b⟩_Σ`.
pub fn factorize(table: &PairMomentTable, r: usize, omega: usize, ell: usize, cfg: &LRConfig, truth: Option<&PolyNetwork>) -> Result<LowRankReport> {
    cfg.validate()?;
    if omega % 2 == 0 {
        return Err(Error::domain(format!("factorization needs odd ω, got {omega}")));
    }
    if r == 0 || ell == 0 {
        return Err(Error::domain("r and ℓ must be positive"));
    }
    let d = table.d();
    let sigma = SigmaMatrix::with_mode(r, omega, cfg.sigma_mode)?;
    let mut notes = Vec::new();

    let (units, components, combo, anchor, iterations, restarts_used) = match cfg.backend {
        Backend::Sos => {
            let m = binomial((r + omega - 1) as u64, omega as u64) as usize;
            if d < m {
                return Err(Error::domain(format!("d = {d} is below C(r+ω−1,ω) = {m}")));
            }
            let out = sos_backend(table, &sigma, ell, cfg)?;
            (out.units, None, Some(out.combo), Some(out.anchor), out.iterations, 1)
        }
        Backend::Local | Backend::Hybrid => {
            if cfg.backend == Backend::Hybrid {
                notes.push("hybrid runs the local backend; relaxation output carries no components to seed it".into());
            }
            let out = local_backend(&table.s, &sigma, ell, cfg);
            let limit = 1e3 * table.eta.max(cfg.tol);
            if out.residual > limit {
                return Err(Error::Convergence(format!(
                    "best of {} restarts has pair residual {:.3e} above {limit:.3e}",
                    out.restarts_used, out.residual
                )));
            }
            let fs: Vec<DVector<f64>> = out.comps.iter().map(|u| f_vector_components(u, omega)).collect();
            let combo = match find_combo(&f_gram(&fs), r, cfg.rng_seed) {
                Ok(c) if cfg.combo_tries > 1 => best_combo(&f_gram(&fs), &f_matrices(&fs), r, cfg.rng_seed, cfg.combo_tries).ok().or(Some(c)),
                Ok(c) => Some(c),
                Err(e) => {
                    notes.push(format!("output not gauge fixed: {e}"));
                    None
                }
            };
            let (comps, anchor) = match &combo {
                Some(c) => match canonicalize_components(&out.comps, omega, c) {
                    Ok(x) => x,
                    Err(Error::Degeneracy(msg)) => {
                        notes.push(format!("output not gauge fixed: {msg}"));
                        sign_fix(out.comps, omega)?
                    }
                    Err(e) => return Err(e),
                },
                None => sign_fix(out.comps, omega)?,
            };
            let units = comps.iter().map(|u| SymTensor::from_components(u, omega)).collect::<Result<Vec<_>>>()?;
            (units, Some(comps), combo, Some(anchor), out.iterations, out.restarts_used)
        }
    };

    let residual = pair_residual(&units, &table.s, &sigma);
    let align = AlignConfig::default();
    let gauge = match (truth, &components) {
        (Some(t), Some(c)) => Some(gauge_distance(t, &PolyNetwork::lowrank(omega, c.clone())?, &align)?.0),
        (Some(t), None) => Some(gauge_distance_to_tensors(t, &units, &align)?.0),
        (None, _) => None,
    };
    Ok(LowRankReport {
        units,
        components,
        residual,
        gauge_distance: gauge,
        backend: cfg.backend,
        iterations,
        restarts_used,
        combo,
        anchor,
        notes,
    })
}
