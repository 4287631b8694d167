use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::combo::{best_combo, find_combo, validate_nondegeneracy, NonDegenCombo};
use super::gauge_fix::gauge_fix_units;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_ascending;
use crate::model::PolyNetwork;
use crate::moments::QuadraticMomentTable;
use crate::optim::{levenberg_marquardt, LeastSquares, LmConfig};
use crate::relaxation::{encode_tensor_ring, solve, SolveOutcome, SolverConfig, TensorRingParams};
use crate::rng::{domain, stream};
use crate::tensor_core::{binomial, gauge_distance, AlignConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Sos,
    Local,
    Hybrid,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sos" => Ok(Backend::Sos),
            "local" => Ok(Backend::Local),
            "hybrid" => Ok(Backend::Hybrid),
            _ => Err(Error::Usage(format!("unknown backend '{s}' (expected sos, local or hybrid)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TRConfig {
    pub backend: Backend,
    pub sos_degree: usize,
    pub restarts: usize,
    /// Target for the max moment residual; also the early-stop threshold.
    pub tol: f64,
    pub rng_seed: u64,
    /// Initial weight of the gauge penalties relative to the moment residuals.
    pub penalty_weight: f64,
    /// Number of 50-iteration penalty stages, each ×10 heavier than the last.
    /// 0 solves the moment equations alone.
    pub penalty_stages: usize,
    pub max_iter: usize,
    /// Fresh FindCombo draws; the one with the largest measured υ is kept.
    pub combo_tries: usize,
    /// Overrides the κ estimate used by the relaxation's `L` bound.
    pub kappa: Option<f64>,
    /// Overrides the Frobenius radius `R` of the relaxation.
    pub radius: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for TRConfig {
    fn default() -> Self {
        TRConfig {
            backend: Backend::Local,
            sos_degree: 4,
            restarts: 20,
            tol: 1e-12,
            rng_seed: 0,
            penalty_weight: 10.0,
            penalty_stages: 4,
            max_iter: 400,
            combo_tries: 1,
            kappa: None,
            radius: None,
            solver: SolverConfig::default(),
        }
    }
}

impl TRConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || !(self.tol > 0.0) {
            return Err(Error::Configuration("restarts must be ≥ 1 and tol > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub units: Vec<DMatrix<f64>>,
    /// `max |Tr(Q̂_aQ̂_b) − S_ab|`.
    pub s_residual: f64,
    /// `max |Tr(Q̂_aQ̂_bQ̂_c) − T_abc|`.
    pub t_residual: f64,
    pub gauge_distance: Option<f64>,
    /// Primal residual of the pseudoexpectation, when a relaxation ran.
    pub relaxation_residual: Option<f64>,
    pub backend: Backend,
    pub iterations: usize,
    pub restarts_used: usize,
    pub combo: Option<NonDegenCombo>,
    pub notes: Vec<String>,
}

impl RecoveryReport {
    pub fn max_residual(&self) -> f64 {
        self.s_residual.max(self.t_residual)
    }

    pub fn network(&self) -> Result<PolyNetwork> {
        PolyNetwork::quadratic(self.units.clone())
    }
}

/// Max absolute second- and third-moment residuals of candidate units.
pub fn moment_residuals(units: &[DMatrix<f64>], table: &QuadraticMomentTable) -> (f64, f64) {
    let d = units.len();
    let mut s_res = 0.0f64;
    let mut t_res = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let p = &units[a] * &units[b];
            s_res = s_res.max((p.trace() - table.s[(a, b)]).abs());
            for c in 0..d {
                let tr = p.component_mul(&units[c].transpose()).sum();
                t_res = t_res.max((tr - table.t(a, b, c)).abs());
            }
        }
    }
    (s_res, t_res)
}

fn upper_len(r: usize) -> usize {
    r * (r + 1) / 2
}

fn unpack_units(x: &DVector<f64>, d: usize, r: usize) -> Vec<DMatrix<f64>> {
    let m = upper_len(r);
    (0..d)
        .map(|a| {
            let mut q = DMatrix::zeros(r, r);
            let mut k = a * m;
            for i in 0..r {
                for j in i..r {
                    q[(i, j)] = x[k];
                    q[(j, i)] = x[k];
                    k += 1;
                }
            }
            q
        })
        .collect()
}

fn pack_units(units: &[DMatrix<f64>]) -> DVector<f64> {
    let r = units[0].nrows();
    let mut out = Vec::with_capacity(units.len() * upper_len(r));
    for q in units {
        for i in 0..r {
            for j in i..r {
                out.push(q[(i, j)]);
            }
        }
    }
    DVector::from_vec(out)
}

/// `∂ Tr(E_{ij} P) / ∂q_{ij}` for the symmetric elementary direction.
fn grad_entries(p: &DMatrix<f64>, out: &mut [f64]) {
    let r = p.nrows();
    let mut k = 0;
    for i in 0..r {
        for j in i..r {
            out[k] = if i == j { p[(i, i)] } else { p[(i, j)] + p[(j, i)] };
            k += 1;
        }
    }
}

/// Moment-matching least squares over symmetric units, plus gauge penalties.
struct TrProblem<'a> {
    d: usize,
    r: usize,
    table: &'a QuadraticMomentTable,
    combo: Option<(&'a DVector<f64>, &'a DVector<f64>)>,
    weight: f64,
}

impl TrProblem<'_> {
    fn pos(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.r - i * (i + 1) / 2 + j
    }

    fn n_penalty(&self) -> usize {
        let r = self.r;
        if self.combo.is_some() {
            r * (r - 1) / 2 + r * (r - 1) / 2 + (r - 1)
        } else {
            0
        }
    }

    fn combine(&self, units: &[DMatrix<f64>], w: &DVector<f64>) -> DMatrix<f64> {
        super::combo::combine(units, w)
    }
}

impl LeastSquares for TrProblem<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let (d, r) = (self.d, self.r);
        let units = unpack_units(x, d, r);
        let mut out = Vec::with_capacity(d * d + d * d * d + self.n_penalty());
        for a in 0..d {
            for b in 0..d {
                out.push((&units[a] * &units[b]).trace() - self.table.s[(a, b)]);
            }
        }
        for a in 0..d {
            for b in 0..d {
                let p = &units[a] * &units[b];
                for c in 0..d {
                    out.push(p.component_mul(&units[c]).sum() - self.table.t(a, b, c));
                }
            }
        }
        if let Some((lam, mu)) = self.combo {
            let sw = self.weight.sqrt();
            let ql = self.combine(&units, lam);
            let qm = self.combine(&units, mu);
            for i in 0..r {
                for j in (i + 1)..r {
                    out.push(sw * ql[(i, j)]);
                }
            }
            for i in 0..r {
                for j in (i + 1)..r {
                    out.push(sw * (ql[(i, i)] - ql[(j, j)]).max(0.0));
                }
            }
            for j in 1..r {
                out.push(sw * (-qm[(0, j)]).max(0.0));
            }
        }
        DVector::from_vec(out)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (d, r) = (self.d, self.r);
        let m = upper_len(r);
        let units = unpack_units(x, d, r);
        let n_rows = d * d + d * d * d + self.n_penalty();
        let mut jac = DMatrix::zeros(n_rows, d * m);
        let mut g = vec![0.0; m];
        let mut row = 0;
        for a in 0..d {
            for b in 0..d {
                grad_entries(&units[b], &mut g);
                for k in 0..m {
                    jac[(row, a * m + k)] += g[k];
                }
                grad_entries(&units[a], &mut g);
                for k in 0..m {
                    jac[(row, b * m + k)] += g[k];
                }
                row += 1;
            }
        }
        let prods: Vec<DMatrix<f64>> = (0..d * d).map(|ab| &units[ab / d] * &units[ab % d]).collect();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for (e, p) in [(a, &prods[b * d + c]), (b, &prods[c * d + a]), (c, &prods[a * d + b])] {
                        grad_entries(p, &mut g);
                        for k in 0..m {
                            jac[(row, e * m + k)] += g[k];
                        }
                    }
                    row += 1;
                }
            }
        }
        if let Some((lam, mu)) = self.combo {
            let sw = self.weight.sqrt();
            let ql = self.combine(&units, lam);
            let qm = self.combine(&units, mu);
            for i in 0..r {
                for j in (i + 1)..r {
                    for e in 0..d {
                        jac[(row, e * m + self.pos(i, j))] = sw * lam[e];
                    }
                    row += 1;
                }
            }
            for i in 0..r {
                for j in (i + 1)..r {
                    if ql[(i, i)] > ql[(j, j)] {
                        for e in 0..d {
                            jac[(row, e * m + self.pos(i, i))] = sw * lam[e];
                            jac[(row, e * m + self.pos(j, j))] = -sw * lam[e];
                        }
                    }
                    row += 1;
                }
            }
            for j in 1..r {
                if qm[(0, j)] < 0.0 {
                    for e in 0..d {
                        jac[(row, e * m + self.pos(0, j))] = -sw * mu[e];
                    }
                }
                row += 1;
            }
        }
        jac
    }
}

fn random_start(table: &QuadraticMomentTable, r: usize, seed: u64, restart: u64) -> Vec<DMatrix<f64>> {
    let mut rng = stream(seed, domain::RESTART, restart);
    (0..table.d())
        .map(|a| {
            let mut g = DMatrix::zeros(r, r);
            for i in 0..r {
                for j in i..r {
                    let x: f64 = rng.sample(StandardNormal);
                    g[(i, j)] = x;
                    g[(j, i)] = x;
                }
            }
            let target = table.s[(a, a)].max(0.0).sqrt();
            let norm = g.norm().max(1e-12);
            g * (target / norm)
        })
        .collect()
}

struct LocalOutcome {
    units: Vec<DMatrix<f64>>,
    residual: f64,
    iterations: usize,
    restarts_used: usize,
}

fn local_backend(
    table: &QuadraticMomentTable,
    r: usize,
    cfg: &TRConfig,
    combo: Option<&NonDegenCombo>,
    warm: Option<Vec<DMatrix<f64>>>,
) -> LocalOutcome {
    let d = table.d();
    let combo_ref = combo.map(|c| (&c.lambda, &c.mu));
    let mut best: Option<(Vec<DMatrix<f64>>, f64)> = None;
    let mut iterations = 0;
    let mut used = 0;
    for restart in 0..cfg.restarts {
        used += 1;
        let start = match (&warm, restart) {
            (Some(w), 0) => w.clone(),
            _ => random_start(table, r, cfg.rng_seed, restart as u64),
        };
        let mut x = pack_units(&start);
        // Annealed penalty stages, then an unpenalized polish; the final gauge
        // fix restores the constraints exactly.
        let stages = if combo_ref.is_some() { cfg.penalty_stages } else { 0 };
        for stage in 0..=stages {
            let polish = stage == stages;
            let problem = TrProblem {
                d,
                r,
                table,
                combo: if polish { None } else { combo_ref },
                weight: cfg.penalty_weight * 10f64.powi(stage as i32),
            };
            let lm = LmConfig { max_iter: if polish { cfg.max_iter } else { 50 }, tol_cost: if polish { 0.0 } else { 1e-28 }, ..LmConfig::default() };
            let rep = levenberg_marquardt(&problem, x, &lm);
            iterations += rep.iterations;
            x = rep.x;
        }
        let units = unpack_units(&x, d, r);
        let (s_res, t_res) = moment_residuals(&units, table);
        let res = s_res.max(t_res);
        if best.as_ref().is_none_or(|(_, b)| res < *b) {
            best = Some((units, res));
        }
        if res <= cfg.tol {
            break;
        }
    }
    let (units, residual) = best.expect("restarts ≥ 1");
    LocalOutcome { units, residual, iterations, restarts_used: used }
}

/// Default `R` and `κ` for the relaxation, read off `S`.
fn relaxation_bounds(table: &QuadraticMomentTable, r: usize) -> (f64, f64) {
    let d = table.d();
    let m = upper_len(r);
    let smax = (0..d).map(|a| table.s[(a, a)]).fold(0.0f64, f64::max);
    let radius = ((smax + table.eta) * 1.01).sqrt().max(1e-6);
    let (vals, _) = sym_eigen_ascending(&table.s);
    let lam_m = vals[d - m].max(1e-12);
    // ‖L*‖²_F ≤ 2m/λ_m(S); keep a factor-2 margin.
    let kappa = 0.5 * r as f64 * (lam_m / (2.0 * m as f64)).sqrt();
    (radius, kappa)
}

fn sos_backend(table: &QuadraticMomentTable, r: usize, cfg: &TRConfig, combo: &NonDegenCombo) -> Result<(Vec<DMatrix<f64>>, usize, f64)> {
    let (radius, kappa_est) = relaxation_bounds(table, r);
    let params = TensorRingParams {
        r,
        moments: table.clone(),
        lambda: combo.lambda.clone(),
        mu: combo.mu.clone(),
        radius: cfg.radius.unwrap_or(radius),
        kappa: cfg.kappa.unwrap_or(kappa_est),
        eta: table.eta,
        degree: cfg.sos_degree,
    };
    let enc = encode_tensor_ring(&params)?;
    match solve(&enc.program, &cfg.solver)? {
        SolveOutcome::Feasible(pe) => Ok((enc.expected_units(&pe)?, pe.iterations, pe.primal_residual)),
        SolveOutcome::Infeasible { iterations, residual } => Err(Error::Convergence(format!(
            "relaxation reported infeasible after {iterations} iterations (residual {residual:.3e})"
        ))),
    }
}

/// Recover `Q̂_1…Q̂_d` from second and third moments.
pub fn decompose(table: &QuadraticMomentTable, r: usize, cfg: &TRConfig, truth: Option<&PolyNetwork>) -> Result<RecoveryReport> {
    cfg.validate()?;
    let d = table.d();
    let m = binomial(r as u64 + 1, 2) as usize;
    if r == 0 || d < m {
        return Err(Error::domain(format!("d = {d} is below C(r+1,2) = {m}")));
    }
    let mut notes = Vec::new();
    let combo = match find_combo(&table.s, r, cfg.rng_seed) {
        Ok(c) => Some(c),
        Err(Error::Degeneracy(msg)) if cfg.backend == Backend::Local => {
            notes.push(format!("gauge penalties disabled: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };

    let mut relaxation_residual = None;
    let (mut units, iterations, restarts_used) = match cfg.backend {
        Backend::Local | Backend::Hybrid => {
            let warm = if cfg.backend == Backend::Hybrid {
                let (u, _, res) = sos_backend(table, r, cfg, combo.as_ref().expect("checked"))?;
                relaxation_residual = Some(res);
                Some(u)
            } else {
                None
            };
            let out = local_backend(table, r, cfg, combo.as_ref(), warm);
            let limit = 1e3 * table.eta.max(cfg.tol);
            if out.residual > limit {
                return Err(Error::Convergence(format!(
                    "best of {} restarts has moment residual {:.3e} above {limit:.3e}",
                    out.restarts_used, out.residual
                )));
            }
            (out.units, out.iterations, out.restarts_used)
        }
        Backend::Sos => {
            let (u, it, res) = sos_backend(table, r, cfg, combo.as_ref().expect("checked"))?;
            relaxation_residual = Some(res);
            (u, it, 1)
        }
    };

    let mut combo = combo;
    if let Some(c) = combo.as_mut() {
        if cfg.combo_tries > 1 {
            *c = best_combo(&table.s, &units, r, cfg.rng_seed, cfg.combo_tries)?;
        } else {
            c.upsilon = Some(validate_nondegeneracy(&units, &c.lambda, &c.mu)?);
        }
        if cfg.backend != Backend::Sos {
            match gauge_fix_units(&units, &c.lambda, &c.mu) {
                Ok((fixed, _)) => units = fixed,
                Err(Error::Degeneracy(msg)) => notes.push(format!("output not gauge fixed: {msg}")),
                Err(e) => return Err(e),
            }
        }
    }

    let (s_residual, t_residual) = moment_residuals(&units, table);
    let gauge = match truth {
        Some(t) => Some(gauge_distance(t, &PolyNetwork::quadratic(units.clone())?, &AlignConfig::default())?.0),
        None => None,
    };
    Ok(RecoveryReport {
        units,
        s_residual,
        t_residual,
        gauge_distance: gauge,
        relaxation_residual,
        backend: cfg.backend,
        iterations,
        restarts_used,
        combo,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::smoothed_quadratic_instance;
    use crate::moments::exact_quadratic_moments;

    #[test]
    fn jacobian_matches_differences() {
        let net = smoothed_quadratic_instance(2, 3, 0.5, 2).unwrap();
        let table = exact_quadratic_moments(&net).unwrap();
        let lam = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let mu = DVector::from_vec(vec![0.0, 0.6, 0.8]);
        let problem = TrProblem { d: 3, r: 2, table: &table, combo: Some((&lam, &mu)), weight: 7.0 };
        let x = pack_units(&random_start(&table, 2, 1, 0));
        let analytic = problem.jacobian(&x);
        struct Fd<'a>(&'a TrProblem<'a>);
        impl LeastSquares for Fd<'_> {
            fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
                self.0.residuals(x)
            }
        }
        let numeric = Fd(&problem).jacobian(&x);
        assert!((analytic - numeric).amax() <= 1e-6);
    }

    #[test]
    fn scalar_units_closed_form() {
        let units: Vec<DMatrix<f64>> = [0.7, -1.3, 2.0].iter().map(|&q| DMatrix::from_element(1, 1, q)).collect();
        let net = PolyNetwork::quadratic(units).unwrap();
        let table = exact_quadratic_moments(&net).unwrap();
        let rep = decompose(&table, 1, &TRConfig::default(), None).unwrap();
        for a in 0..3 {
            let expected = table.t(a, a, a) / table.s[(a, a)];
            assert!((rep.units[a][(0, 0)] - expected).abs() <= 1e-9);
        }
    }

    #[test]
    fn noiseless_recovery_is_gauge_invariant() {
        let net = smoothed_quadratic_instance(2, 3, 0.5, 6).unwrap();
        let table = exact_quadratic_moments(&net).unwrap();
        let rep = decompose(&table, 2, &TRConfig::default(), Some(&net)).unwrap();
        assert!(rep.gauge_distance.unwrap() <= 1e-6, "{:?}", rep.gauge_distance);
        let rotated = crate::tensor_core::rotate_network(&net, &crate::tensor_core::GaugeRotation::random(2, 3)).unwrap();
        let rep2 = decompose(&exact_quadratic_moments(&rotated).unwrap(), 2, &TRConfig::default(), None).unwrap();
        let (dist, _) = gauge_distance(&rep.network().unwrap(), &rep2.network().unwrap(), &AlignConfig::default()).unwrap();
        assert!(dist <= 1e-6);
    }

    #[test]
    fn gauge_constraints_hold_on_output() {
        let net = smoothed_quadratic_instance(2, 3, 0.5, 11).unwrap();
        let table = exact_quadratic_moments(&net).unwrap();
        let rep = decompose(&table, 2, &TRConfig::default(), None).unwrap();
        let c = rep.combo.as_ref().unwrap();
        let ql = super::super::combo::combine(&rep.units, &c.lambda);
        let qm = super::super::combo::combine(&rep.units, &c.mu);
        assert!(ql[(0, 1)].abs() <= 1e-9);
        assert!(ql[(0, 0)] <= ql[(1, 1)]);
        assert!(qm[(0, 1)] >= -1e-9);
    }
}
