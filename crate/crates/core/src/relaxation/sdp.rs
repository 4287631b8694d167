use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::poly::{Monomial, Polynomial};
use super::program::PolynomialProgram;
use super::pseudo::Pseudoexpectation;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_ascending;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub dual_tol: f64,
    pub max_iter: usize,
    pub max_dim: usize,
    /// Cap on the number of distinct moments (the linear system is dense).
    pub max_moments: usize,
    pub rho: f64,
    pub sigma: f64,
    pub relaxation: f64,
    /// Weight of the moment-matrix trace objective; 0 solves for feasibility.
    pub trace_weight: f64,
    pub stall_window: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-7,
            dual_tol: 1e-5,
            max_iter: 50_000,
            max_dim: 5000,
            max_moments: 12_000,
            rho: 0.1,
            sigma: 1e-6,
            relaxation: 1.6,
            trace_weight: 0.0,
            stall_window: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Feasible(Pseudoexpectation),
    Infeasible { iterations: usize, residual: f64 },
}

impl SolveOutcome {
    pub fn feasible(self) -> Option<Pseudoexpectation> {
        match self {
            SolveOutcome::Feasible(pe) => Some(pe),
            SolveOutcome::Infeasible { .. } => None,
        }
    }
}

type Row = Vec<(usize, f64)>;

struct Block {
    side: usize,
    /// Packed upper triangle (row-major, diagonal included), each entry linear in y.
    entries: Vec<Row>,
    clique: Option<usize>,
}

pub(crate) struct Layout {
    pub monomials: Vec<Monomial>,
    pub index: HashMap<Monomial, usize>,
    pub bases: Vec<Vec<Monomial>>,
    eq_rows: Vec<Row>,
    eq_rhs: Vec<f64>,
    blocks: Vec<Block>,
}

fn lookup(index: &HashMap<Monomial, usize>, m: &Monomial) -> Option<usize> {
    index.get(m).copied()
}

fn poly_row(index: &HashMap<Monomial, usize>, p: &Polynomial, shift: &Monomial) -> Option<(Row, f64)> {
    let mut row: Row = Vec::with_capacity(p.len());
    let mut constant = 0.0;
    for (m, c) in p.terms() {
        let mm = m.mul(shift);
        if mm.degree() == 0 {
            constant += c;
        }
        let k = lookup(index, &mm)?;
        row.push((k, c));
    }
    Some((row, constant))
}

fn localizing(index: &HashMap<Monomial, usize>, p: &Polynomial, basis: &[Monomial]) -> Option<Vec<Row>> {
    let n = basis.len();
    let mut entries = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            let (row, _) = poly_row(index, p, &basis[i].mul(&basis[j]))?;
            entries.push(row);
        }
    }
    Some(entries)
}

pub(crate) fn build_layout(program: &PolynomialProgram, cfg: &SolverConfig) -> Result<Layout> {
    program.validate()?;
    let cliques = program.cliques();
    let mut monomials = Vec::new();
    let mut index: HashMap<Monomial, usize> = HashMap::new();
    let one = Monomial::one();
    index.insert(one.clone(), 0);
    monomials.push(one.clone());

    let mut bases = Vec::with_capacity(cliques.len());
    for cl in &cliques {
        let basis = Monomial::basis(&cl.vars, cl.degree / 2);
        if basis.len() > cfg.max_dim {
            return Err(Error::Resource(format!(
                "moment matrix side {} exceeds the cap {}",
                basis.len(),
                cfg.max_dim
            )));
        }
        for i in 0..basis.len() {
            for j in i..basis.len() {
                let m = basis[i].mul(&basis[j]);
                if !index.contains_key(&m) {
                    index.insert(m.clone(), monomials.len());
                    monomials.push(m);
                }
                if monomials.len() > cfg.max_moments {
                    return Err(Error::Resource(format!(
                        "relaxation needs more than {} moments",
                        cfg.max_moments
                    )));
                }
            }
        }
        bases.push(basis);
    }

    let contains = |cl: &super::program::Clique, vars: &[u32]| vars.iter().all(|v| cl.vars.binary_search(v).is_ok());

    let mut eq_rows = vec![vec![(0usize, 1.0)]];
    let mut eq_rhs = vec![1.0];
    for con in &program.equalities {
        let vars = con.poly.variables();
        let dp = con.poly.degree();
        let mut seen: HashSet<Monomial> = HashSet::new();
        let mut placed = false;
        for cl in cliques.iter().filter(|cl| contains(cl, &vars) && cl.degree >= dp) {
            placed = true;
            for m in Monomial::basis(&cl.vars, cl.degree - dp) {
                if !seen.insert(m.clone()) {
                    continue;
                }
                let (row, _) = poly_row(&index, &con.poly, &m).expect("clique monomials are indexed");
                push_equality(&mut eq_rows, &mut eq_rhs, row);
            }
        }
        if !placed {
            let (row, _) = poly_row(&index, &con.poly, &one).ok_or_else(|| {
                Error::domain(format!("equality of family '{}' lies outside every clique", con.family))
            })?;
            push_equality(&mut eq_rows, &mut eq_rhs, row);
        }
    }

    let mut blocks = Vec::new();
    for (k, basis) in bases.iter().enumerate() {
        let entries = localizing(&index, &Polynomial::constant(1.0), basis).expect("indexed");
        blocks.push(Block { side: basis.len(), entries, clique: Some(k) });
    }
    for con in &program.inequalities {
        let vars = con.poly.variables();
        let dp = con.poly.degree();
        let host = cliques
            .iter()
            .filter(|cl| contains(cl, &vars) && cl.degree >= dp)
            .max_by_key(|cl| cl.degree);
        let entries = match host {
            Some(cl) => {
                let basis = Monomial::basis(&cl.vars, (cl.degree - dp) / 2);
                localizing(&index, &con.poly, &basis).map(|e| (basis.len(), e))
            }
            None => localizing(&index, &con.poly, &[one.clone()]).map(|e| (1, e)),
        };
        let (side, entries) = entries.ok_or_else(|| {
            Error::domain(format!("inequality of family '{}' lies outside every clique", con.family))
        })?;
        blocks.push(Block { side, entries, clique: None });
    }
    Ok(Layout { monomials, index, bases, eq_rows, eq_rhs, blocks })
}

/// Move the constant term to the right-hand side and drop it from the row.
fn push_equality(rows: &mut Vec<Row>, rhs: &mut Vec<f64>, row: Row) {
    let mut constant = 0.0;
    let mut kept: Row = Vec::with_capacity(row.len());
    for (k, c) in row {
        if k == 0 {
            constant += c;
        } else {
            kept.push((k, c));
        }
    }
    let norm = kept.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    if norm == 0.0 {
        // A constant row: keep it so an inconsistent constant surfaces as a residual.
        if constant != 0.0 {
            rows.push(vec![(0, 1.0)]);
            rhs.push(1.0 - constant);
        }
        return;
    }
    let s = 1.0 / norm;
    rows.push(kept.into_iter().map(|(k, c)| (k, c * s)).collect());
    rhs.push(-constant * s);
}

fn apply(rows: &[Row], y: &DVector<f64>, out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(rows) {
        *o = row.iter().map(|&(k, c)| c * y[k]).sum();
    }
}

fn apply_t(rows: &[Row], v: &[f64], out: &mut DVector<f64>) {
    out.fill(0.0);
    for (row, &w) in rows.iter().zip(v) {
        if w != 0.0 {
            for &(k, c) in row {
                out[k] += c * w;
            }
        }
    }
}

fn unpack(v: &[f64], side: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    let mut p = 0;
    for i in 0..side {
        for j in i..side {
            let x = if i == j { v[p] } else { v[p] / std::f64::consts::SQRT_2 };
            m[(i, j)] = x;
            m[(j, i)] = x;
            p += 1;
        }
    }
    m
}

fn pack(m: &DMatrix<f64>, out: &mut [f64]) {
    let side = m.nrows();
    let mut p = 0;
    for i in 0..side {
        for j in i..side {
            out[p] = if i == j { m[(i, j)] } else { m[(i, j)] * std::f64::consts::SQRT_2 };
            p += 1;
        }
    }
}

fn project_block(v: &mut [f64], side: usize) {
    if side == 1 {
        v[0] = v[0].max(0.0);
        return;
    }
    let (vals, vecs) = sym_eigen_ascending(&unpack(v, side));
    if vals[0] >= 0.0 {
        return;
    }
    let mut m = DMatrix::zeros(side, side);
    for k in 0..side {
        if vals[k] > 0.0 {
            let c = vecs.column(k);
            m += vals[k] * &c * c.transpose();
        }
    }
    pack(&m, v);
}

/// Whether packed position `p` of a `side × side` upper triangle is diagonal.
fn is_diagonal(p: usize, side: usize) -> bool {
    let mut start = 0;
    for i in 0..side {
        if p == start {
            return true;
        }
        if p < start + side - i {
            return false;
        }
        start += side - i;
    }
    false
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Conic feasibility solve of the relaxation by operator-splitting ADMM.
///
/// The free variables are the moments other than Ẽ[1] (pinned to 1). The
/// constraint map stacks the normalized equality rows (target set a point)
/// and the packed PSD blocks, each block rescaled by its largest coefficient.
pub fn solve(program: &PolynomialProgram, cfg: &SolverConfig) -> Result<SolveOutcome> {
    let layout = build_layout(program, cfg)?;
    let n = layout.monomials.len() - 1;
    // Drop the pinned Ẽ[1] = 1 row; constant-only rows keep their residual.
    let eq: Vec<(Row, f64)> = layout
        .eq_rows
        .iter()
        .zip(&layout.eq_rhs)
        .skip(1)
        .map(|(row, &f)| {
            let c0: f64 = row.iter().filter(|(k, _)| *k == 0).map(|(_, c)| c).sum();
            (row.iter().filter(|(k, _)| *k != 0).map(|&(k, c)| (k - 1, c)).collect(), f - c0)
        })
        .collect();
    let n_eq = eq.len();
    let mut rows: Vec<Row> = eq.iter().map(|(r, _)| r.clone()).collect();
    let eq_rhs: Vec<f64> = eq.iter().map(|(_, f)| *f).collect();
    let mut shift = vec![0.0; n_eq];
    let mut offsets = Vec::with_capacity(layout.blocks.len());
    for b in &layout.blocks {
        offsets.push(rows.len());
        let big = b.entries.iter().flatten().fold(0.0f64, |a, &(_, c)| a.max(c.abs()));
        let s = if big > 0.0 { 1.0 / big } else { 1.0 };
        for (p, entry) in b.entries.iter().enumerate() {
            // Off-diagonal entries carry √2 so the packed norm is the Frobenius norm.
            let w = if is_diagonal(p, b.side) { s } else { s * std::f64::consts::SQRT_2 };
            let c0: f64 = entry.iter().filter(|(k, _)| *k == 0).map(|(_, c)| c).sum();
            shift.push(c0 * w);
            rows.push(entry.iter().filter(|(k, _)| *k != 0).map(|&(k, c)| (k - 1, c * w)).collect());
        }
    }
    let m = rows.len();

    let mut c = DVector::zeros(n);
    for b in layout.blocks.iter().filter(|b| b.clique.is_some()) {
        let mut p = 0;
        for i in 0..b.side {
            for j in i..b.side {
                if i == j {
                    for &(k, coef) in &b.entries[p] {
                        if k > 0 {
                            c[k - 1] += cfg.trace_weight * coef;
                        }
                    }
                }
                p += 1;
            }
        }
    }
    let c_norm = inf_norm(c.as_slice()).max(1.0);
    let feasibility_only = c.iter().all(|&v| v == 0.0);

    let eq_scale = 1e3;
    let mut rho = cfg.rho;
    let rho_vec = |rho: f64| -> Vec<f64> { (0..m).map(|i| if i < n_eq { rho * eq_scale } else { rho }).collect() };
    let factor = |rv: &[f64]| -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let mut p = DMatrix::<f64>::identity(n, n) * cfg.sigma;
        for (row, &w) in rows.iter().zip(rv) {
            for &(a, ca) in row {
                for &(b, cb) in row {
                    p[(a, b)] += w * ca * cb;
                }
            }
        }
        nalgebra::Cholesky::new(p).ok_or_else(|| Error::Convergence("relaxation normal matrix is not positive definite".into()))
    };
    let mut rv = rho_vec(rho);
    let mut chol = factor(&rv)?;

    let alpha = cfg.relaxation;
    let mut y = DVector::zeros(n);
    let mut z = vec![0.0; m];
    let mut lam = vec![0.0; m];
    let mut kx = vec![0.0; m];
    let mut kt = DVector::zeros(n);
    let mut tmp = vec![0.0; m];
    let mut zr = vec![0.0; m];
    let mut best_primal = f64::INFINITY;
    let mut best_at = 0usize;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut refactors = 0;
    let mut iter = 0;

    while iter < cfg.max_iter {
        iter += 1;
        for i in 0..m {
            tmp[i] = rv[i] * z[i] - lam[i];
        }
        apply_t(&rows, &tmp, &mut kt);
        let rhs = &y * cfg.sigma - &c + &kt;
        let yt = chol.solve(&rhs);
        apply(&rows, &yt, &mut kx);
        y = &yt * alpha + &y * (1.0 - alpha);
        for i in 0..m {
            zr[i] = alpha * kx[i] + (1.0 - alpha) * z[i];
            z[i] = zr[i] + lam[i] / rv[i] + shift[i];
        }
        z[..n_eq].copy_from_slice(&eq_rhs);
        for (b, &off) in layout.blocks.iter().zip(&offsets) {
            project_block(&mut z[off..off + b.entries.len()], b.side);
        }
        for i in n_eq..m {
            z[i] -= shift[i];
        }
        for i in 0..m {
            lam[i] += rv[i] * (zr[i] - z[i]);
        }

        if iter % 10 != 0 && iter != cfg.max_iter {
            continue;
        }
        apply(&rows, &y, &mut kx);
        primal = kx.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        apply_t(&rows, &lam, &mut kt);
        // Without an objective any feasible point will do and ρ is scale-free.
        dual = if feasibility_only { 0.0 } else { inf_norm((&c + &kt).as_slice()) / c_norm };
        if primal <= cfg.tol && dual <= cfg.dual_tol {
            break;
        }
        if primal < best_primal * 0.99 {
            best_primal = primal;
            best_at = iter;
        } else if primal > 10.0 * cfg.tol && iter - best_at >= cfg.stall_window {
            return Ok(SolveOutcome::Infeasible { iterations: iter, residual: primal });
        }
        if feasibility_only {
            continue;
        }
        if iter % 50 == 0 && refactors < 40 {
            let kx_n = inf_norm(&kx).max(inf_norm(&z)).max(1e-12);
            let kt_n = inf_norm(kt.as_slice()).max(inf_norm(c.as_slice())).max(1e-12);
            let ratio = ((primal / kx_n) / (dual * c_norm / kt_n).max(1e-300)).sqrt();
            if ratio.is_finite() && !(0.2..=5.0).contains(&ratio) {
                // Scaled duals stay valid; only the penalty weights change.
                rho = (rho * ratio).clamp(1e-6, 1e6);
                rv = rho_vec(rho);
                chol = factor(&rv)?;
                refactors += 1;
            }
        }
    }

    if primal > 10.0 * cfg.tol {
        return Ok(SolveOutcome::Infeasible { iterations: iter, residual: primal });
    }

    let mut values = Vec::with_capacity(n + 1);
    values.push(1.0);
    values.extend(y.iter().copied());
    let full = DVector::from_vec(values.clone());
    let mut matrices = Vec::new();
    let mut min_eig = f64::INFINITY;
    for b in &layout.blocks {
        let mut seg = vec![0.0; b.entries.len()];
        apply(&b.entries, &full, &mut seg);
        let mut mat = DMatrix::zeros(b.side, b.side);
        let mut p = 0;
        for i in 0..b.side {
            for j in i..b.side {
                mat[(i, j)] = seg[p];
                mat[(j, i)] = seg[p];
                p += 1;
            }
        }
        if b.clique.is_some() {
            min_eig = min_eig.min(sym_eigen_ascending(&mat).0[0]);
            matrices.push(mat);
        }
    }
    Ok(SolveOutcome::Feasible(Pseudoexpectation::new(
        program.degree,
        layout.monomials,
        layout.index,
        values,
        layout.bases,
        matrices,
        iter,
        primal,
        dual,
        min_eig,
    )))
}
