use nalgebra::{DMatrix, DVector};

use super::poly::{Monomial, Polynomial};
use super::program::PolynomialProgram;
use crate::error::{Error, Result};
use crate::linalg::sqrt_psd;
use crate::moments::{QuadraticMomentTable, SigmaMatrix};
use crate::tensor_core::multiindex::{binomial, SortedIndices};

pub const FAM_SYMMETRY: &str = "symmetry";
pub const FAM_SECOND: &str = "second_moments";
pub const FAM_THIRD: &str = "third_moments";
pub const FAM_Q_BOUND: &str = "q_bounded";
pub const FAM_LEFT_INVERSE: &str = "left_inverse_l";
pub const FAM_L_BOUND: &str = "l_bounded";
pub const FAM_DIAGONAL: &str = "lambda_diagonal";
pub const FAM_SORTED: &str = "lambda_sorted";
pub const FAM_FIRST_ROW: &str = "mu_first_row";
pub const FAM_LOW_RANK: &str = "low_rank";
pub const FAM_LOW_RANK_LIFT: &str = "low_rank_products";
pub const FAM_T_BOUND: &str = "t_bounded";
pub const FAM_INVERSE_P: &str = "inverse_p";
pub const FAM_P_BOUND: &str = "p_bounded";
pub const FAM_F_DEFINITION: &str = "f_definition";

fn var(v: u32) -> Polynomial {
    Polynomial::var(v)
}

/// Add `|p − target| ≤ η` as an equality when η = 0, else as two inequalities.
fn add_band(prog: &mut PolynomialProgram, family: &str, p: Polynomial, target: f64, eta: f64) {
    let centered = p.sub(&Polynomial::constant(target));
    if eta == 0.0 {
        prog.add_equality(family, centered);
    } else {
        prog.add_inequality(family, Polynomial::constant(eta).sub(&centered));
        prog.add_inequality(family, Polynomial::constant(eta).add(&centered));
    }
}

fn sum_of_squares(vars: impl IntoIterator<Item = (u32, f64)>) -> Polynomial {
    let mut p = Polynomial::zero();
    for (v, w) in vars {
        p.add_term(Monomial::from_vars(vec![v, v]), w);
    }
    p
}

fn left_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(true, true);
    if svd.singular_values.iter().any(|&s| s <= 1e-12 * svd.singular_values.max().max(1.0)) {
        return Err(Error::degenerate("matrix has no well-defined left inverse"));
    }
    svd.pseudo_inverse(0.0).map_err(|e| Error::degenerate(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct TensorRingParams {
    pub r: usize,
    pub moments: QuadraticMomentTable,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
    pub radius: f64,
    pub kappa: f64,
    pub eta: f64,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct TensorRingEncoding {
    pub program: PolynomialProgram,
    r: usize,
    d: usize,
    q: Vec<Vec<u32>>,
    l: Vec<u32>,
}

fn packed(i: usize, j: usize, r: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * r - i * (i + 1) / 2 + j
}

impl TensorRingEncoding {
    /// Variable holding `(Q_a)_{ij}` (shared by `(i,j)` and `(j,i)`).
    pub fn q_var(&self, a: usize, i: usize, j: usize) -> u32 {
        self.q[a][packed(i, j, self.r)]
    }

    /// Variable holding `L_{k,a}`, `k` running over sorted pairs.
    pub fn l_var(&self, k: usize, a: usize) -> u32 {
        self.l[k * self.d + a]
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q_poly(&self, a: usize, i: usize, j: usize) -> Polynomial {
        var(self.q_var(a, i, j))
    }

    /// Assignment of the true units plus `L` = left inverse of `M`.
    pub fn ground_truth_point(&self, units: &[DMatrix<f64>]) -> Result<Vec<f64>> {
        if units.len() != self.d || units.iter().any(|u| u.nrows() != self.r) {
            return Err(Error::domain("units do not match the encoding"));
        }
        let pairs = SortedIndices::new(self.r, 2);
        let m = DMatrix::from_fn(self.d, pairs.len(), |a, k| {
            let t = pairs.tuple(k);
            units[a][(t[0], t[1])]
        });
        let l = left_inverse(&m)?;
        let mut x = vec![0.0; self.program.n_vars()];
        for (a, u) in units.iter().enumerate() {
            for i in 0..self.r {
                for j in i..self.r {
                    x[self.q_var(a, i, j) as usize] = u[(i, j)];
                }
            }
        }
        for k in 0..pairs.len() {
            for a in 0..self.d {
                x[self.l_var(k, a) as usize] = l[(k, a)];
            }
        }
        Ok(x)
    }

    /// Units read off a pseudoexpectation: `Ẽ[Q_a]`.
    pub fn expected_units(&self, pe: &super::Pseudoexpectation) -> Result<Vec<DMatrix<f64>>> {
        (0..self.d)
            .map(|a| {
                let mut q = DMatrix::zeros(self.r, self.r);
                for i in 0..self.r {
                    for j in i..self.r {
                        let v = super::pseudo_expect(pe, &self.q_poly(a, i, j))?;
                        q[(i, j)] = v;
                        q[(j, i)] = v;
                    }
                }
                Ok(q)
            })
            .collect()
    }
}

/// Encode the tensor-ring feasibility program.
pub fn encode_tensor_ring(p: &TensorRingParams) -> Result<TensorRingEncoding> {
    let r = p.r;
    let d = p.moments.d();
    if p.degree < 4 || p.degree % 2 == 1 {
        return Err(Error::domain(format!("relaxation degree {} must be even and at least 4", p.degree)));
    }
    if r == 0 {
        return Err(Error::domain("r must be positive"));
    }
    let m = binomial(r as u64 + 1, 2) as usize;
    if d < m {
        return Err(Error::domain(format!("d = {d} is below C(r+1,2) = {m}")));
    }
    if p.lambda.len() != d || p.mu.len() != d {
        return Err(Error::domain("combination vectors must have length d"));
    }
    if !(p.eta >= 0.0) || !(p.kappa > 0.0) || !(p.radius > 0.0) {
        return Err(Error::domain("η must be nonnegative and R, κ positive"));
    }

    let mut prog = PolynomialProgram::new(p.degree);
    let q: Vec<Vec<u32>> = (0..d)
        .map(|a| {
            let mut vs = Vec::with_capacity(m);
            for i in 0..r {
                for j in i..r {
                    vs.push(prog.add_var(format!("Q{a}[{i},{j}]")));
                }
            }
            vs
        })
        .collect();
    let l: Vec<u32> = (0..m).flat_map(|k| (0..d).map(move |a| (k, a))).map(|(k, a)| prog.add_var(format!("L[{k},{a}]"))).collect();
    let enc_q = |a: usize, i: usize, j: usize| var(q[a][packed(i, j, r)]);

    for fam in [
        FAM_SYMMETRY,
        FAM_SECOND,
        FAM_THIRD,
        FAM_Q_BOUND,
        FAM_LEFT_INVERSE,
        FAM_L_BOUND,
        FAM_DIAGONAL,
        FAM_SORTED,
        FAM_FIRST_ROW,
    ] {
        prog.declare_family(fam);
    }

    // Symmetric storage makes Q_a − Q_aᵀ vanish identically.
    for a in 0..d {
        for i in 0..r {
            for j in (i + 1)..r {
                prog.add_equality(FAM_SYMMETRY, enc_q(a, i, j).sub(&enc_q(a, j, i)));
            }
        }
    }

    let trace2 = |a: usize, b: usize| {
        let mut s = Polynomial::zero();
        for i in 0..r {
            for j in 0..r {
                s = s.add(&enc_q(a, i, j).mul(&enc_q(b, j, i)));
            }
        }
        s
    };
    let trace3 = |a: usize, b: usize, c: usize| {
        let mut s = Polynomial::zero();
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    s = s.add(&enc_q(a, i, j).mul(&enc_q(b, j, k)).mul(&enc_q(c, k, i)));
                }
            }
        }
        s
    };
    for a in 0..d {
        for b in a..d {
            add_band(&mut prog, FAM_SECOND, trace2(a, b), p.moments.s[(a, b)], p.eta);
        }
    }
    for a in 0..d {
        for b in a..d {
            for c in b..d {
                add_band(&mut prog, FAM_THIRD, trace3(a, b, c), p.moments.t(a, b, c), p.eta);
            }
        }
    }
    for a in 0..d {
        let mut norm = Polynomial::zero();
        for i in 0..r {
            for j in 0..r {
                norm = norm.add(&enc_q(a, i, j).mul(&enc_q(a, i, j)));
            }
        }
        prog.add_inequality(FAM_Q_BOUND, Polynomial::constant(p.radius * p.radius).sub(&norm));
    }
    let pairs = SortedIndices::new(r, 2);
    for k in 0..m {
        for col in 0..m {
            let t = pairs.tuple(col);
            let mut e = Polynomial::constant(if k == col { -1.0 } else { 0.0 });
            for a in 0..d {
                e = e.add(&var(l[k * d + a]).mul(&enc_q(a, t[0], t[1])));
            }
            prog.add_equality(FAM_LEFT_INVERSE, e);
        }
    }
    let l_cap = (r * r) as f64 / (p.kappa * p.kappa);
    prog.add_inequality(FAM_L_BOUND, Polynomial::constant(l_cap).sub(&sum_of_squares(l.iter().map(|&v| (v, 1.0)))));

    let combo = |w: &DVector<f64>, i: usize, j: usize| {
        let mut s = Polynomial::zero();
        for a in 0..d {
            s = s.add(&enc_q(a, i, j).scale(w[a]));
        }
        s
    };
    for i in 0..r {
        for j in (i + 1)..r {
            prog.add_equality(FAM_DIAGONAL, combo(&p.lambda, i, j));
        }
    }
    for i in 0..r {
        for j in (i + 1)..r {
            prog.add_inequality(FAM_SORTED, combo(&p.lambda, j, j).sub(&combo(&p.lambda, i, i)));
        }
    }
    // (Q_μ)_{11} is a diagonal entry that no sign flip can fix, so the row starts at j = 2.
    for j in 1..r {
        prog.add_inequality(FAM_FIRST_ROW, combo(&p.mu, 0, j));
    }

    let qvars: Vec<u32> = q.iter().flatten().copied().collect();
    prog.add_clique(qvars.clone(), p.degree);
    let mut ql = qvars;
    ql.extend(&l);
    prog.add_clique(ql, 2);
    prog.validate()?;
    Ok(TensorRingEncoding { program: prog, r, d, q, l })
}

#[derive(Debug, Clone)]
pub struct LowRankParams {
    pub r: usize,
    pub omega: usize,
    pub ell: usize,
    pub s: DMatrix<f64>,
    pub sigma: SigmaMatrix,
    pub combos: Option<(DVector<f64>, DVector<f64>)>,
    pub radius: f64,
    pub kappa: f64,
    pub eta: f64,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct LowRankEncoding {
    pub program: PolynomialProgram,
    r: usize,
    d: usize,
    omega: usize,
    ell: usize,
    m: usize,
    t: Vec<u32>,
    v: Vec<u32>,
    f: Vec<u32>,
    l: Vec<u32>,
    p: Vec<u32>,
    sigma_half: DMatrix<f64>,
    sigma: SigmaMatrix,
}

impl LowRankEncoding {
    pub fn t_var(&self, a: usize, k: usize) -> u32 {
        self.t[a * self.m + k]
    }

    pub fn v_var(&self, a: usize, t: usize, i: usize) -> u32 {
        self.v[(a * self.ell + t) * self.r + i]
    }

    pub fn f_var(&self, a: usize, x: usize) -> u32 {
        self.f[a * self.r + x]
    }

    pub fn l_var(&self, k: usize, a: usize) -> u32 {
        self.l[k * self.d + a]
    }

    pub fn p_var(&self, k: usize, a: usize) -> u32 {
        self.p[k * self.d + a]
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Number of sorted multi-indices `C(r+ω−1, ω)`.
    pub fn n_sorted(&self) -> usize {
        self.m
    }

    /// `Σ_sym^{1/2}` used in the inverse-P constraint.
    pub fn sigma_half(&self) -> &DMatrix<f64> {
        &self.sigma_half
    }

    pub fn sigma(&self) -> &SigmaMatrix {
        &self.sigma
    }

    /// Assignment from true components: `T_a`, `v`, `f_a`, `L = M⁺`, `P = (M D Σ^{1/2})⁺`.
    pub fn ground_truth_point(&self, components: &[Vec<DVector<f64>>]) -> Result<Vec<f64>> {
        if components.len() != self.d || components.iter().any(|c| c.len() != self.ell || c.iter().any(|v| v.len() != self.r)) {
            return Err(Error::domain("components do not match the encoding"));
        }
        let idx = self.sigma.indices();
        let mut x = vec![0.0; self.program.n_vars()];
        let mut mm = DMatrix::zeros(self.d, self.m);
        for (a, comps) in components.iter().enumerate() {
            for k in 0..self.m {
                let val: f64 = comps.iter().map(|v| idx.tuple(k).iter().map(|&i| v[i]).product::<f64>()).sum();
                mm[(a, k)] = val;
                x[self.t_var(a, k) as usize] = val;
            }
            for (t, v) in comps.iter().enumerate() {
                for i in 0..self.r {
                    x[self.v_var(a, t, i) as usize] = v[i];
                }
            }
            for xi in 0..self.r {
                let fv: f64 = f_stencil(idx, self.r, self.omega, xi).iter().map(|&(k, c)| c * mm[(a, k)]).sum();
                x[self.f_var(a, xi) as usize] = fv;
            }
        }
        let l = left_inverse(&mm)?;
        let dmat = DMatrix::from_diagonal(&self.sigma.d_diag());
        let p = left_inverse(&(&mm * dmat * &self.sigma_half))?;
        for k in 0..self.m {
            for a in 0..self.d {
                x[self.l_var(k, a) as usize] = l[(k, a)];
                x[self.p_var(k, a) as usize] = p[(k, a)];
            }
        }
        Ok(x)
    }
}

/// Coefficients of `f_x = Σ_{j ∈ [r]^{ω'}} T_{j₁j₁⋯j_{ω'}j_{ω'}x}` on sorted indices.
pub(crate) fn f_stencil(idx: &SortedIndices, r: usize, omega: usize, x: usize) -> Vec<(usize, f64)> {
    let half = (omega - 1) / 2;
    let mut acc = vec![0.0; idx.len()];
    let total = r.pow(half as u32);
    for flat in 0..total {
        let mut tuple = Vec::with_capacity(omega);
        let mut rest = flat;
        for _ in 0..half {
            let j = rest % r;
            rest /= r;
            tuple.push(j);
            tuple.push(j);
        }
        tuple.push(x);
        tuple.sort_unstable();
        acc[idx.position(&tuple).expect("in range")] += 1.0;
    }
    acc.into_iter().enumerate().filter(|(_, c)| *c != 0.0).collect()
}

/// Encode the low-rank factorization program, with the gauge-fixing families
/// on `F_a = f_a f_aᵀ` when combinations are supplied.
pub fn encode_lowrank(p: &LowRankParams) -> Result<LowRankEncoding> {
    let (r, omega, ell) = (p.r, p.omega, p.ell);
    let d = p.s.nrows();
    if omega < 3 || omega % 2 == 0 {
        return Err(Error::domain(format!("ω = {omega} must be odd and at least 3")));
    }
    if p.degree < 2 * omega {
        return Err(Error::domain(format!("relaxation degree {} is below 2ω = {}", p.degree, 2 * omega)));
    }
    if r == 0 || ell == 0 || p.s.ncols() != d {
        return Err(Error::domain("r and ℓ must be positive and S square"));
    }
    if p.sigma.r() != r || p.sigma.omega() != omega {
        return Err(Error::domain("Σ does not match (r, ω)"));
    }
    let idx = p.sigma.indices().clone();
    let m = idx.len();
    if d < m {
        return Err(Error::domain(format!("d = {d} is below C(r+ω−1,ω) = {m}")));
    }
    if let Some((lam, mu)) = &p.combos {
        if lam.len() != d || mu.len() != d {
            return Err(Error::domain("combination vectors must have length d"));
        }
    }
    if !(p.eta >= 0.0) || !(p.kappa > 0.0) || !(p.radius > 0.0) {
        return Err(Error::domain("η must be nonnegative and R, κ positive"));
    }

    let mut prog = PolynomialProgram::new(p.degree);
    let t: Vec<u32> = (0..d)
        .flat_map(|a| (0..m).map(move |k| (a, k)))
        .map(|(a, k)| {
            let name: String = idx.tuple(k).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
            prog.add_var(format!("T{a}[{name}]"))
        })
        .collect();
    let v: Vec<u32> = (0..d * ell * r).map(|n| prog.add_var(format!("v{},{}[{}]", n / (ell * r), (n / r) % ell, n % r))).collect();
    let f: Vec<u32> = (0..d * r).map(|n| prog.add_var(format!("f{}[{}]", n / r, n % r))).collect();
    let l: Vec<u32> = (0..m * d).map(|n| prog.add_var(format!("L[{},{}]", n / d, n % d))).collect();
    let pv: Vec<u32> = (0..m * d).map(|n| prog.add_var(format!("P[{},{}]", n / d, n % d))).collect();

    let mut families = vec![
        FAM_SYMMETRY,
        FAM_SECOND,
        FAM_LOW_RANK,
        FAM_LOW_RANK_LIFT,
        FAM_T_BOUND,
        FAM_LEFT_INVERSE,
        FAM_INVERSE_P,
        FAM_L_BOUND,
        FAM_P_BOUND,
        FAM_F_DEFINITION,
    ];
    if p.combos.is_some() {
        families.extend([FAM_DIAGONAL, FAM_SORTED, FAM_FIRST_ROW]);
    }
    for fam in families {
        prog.declare_family(fam);
    }

    let tv = |a: usize, k: usize| var(t[a * m + k]);
    let vv = |a: usize, s: usize, i: usize| v[(a * ell + s) * r + i];

    // Sorted storage ties every permuted entry to one variable.
    let unsorted = r.pow(omega as u32) - m;
    for _ in 0..d * unsorted {
        prog.add_equality(FAM_SYMMETRY, Polynomial::zero());
    }

    let w = p.sigma.d_diag();
    let gram = DMatrix::from_fn(m, m, |i, j| w[i] * p.sigma.sym()[(i, j)] * w[j]);
    for a in 0..d {
        for b in a..d {
            let mut e = Polynomial::zero();
            for i in 0..m {
                for j in 0..m {
                    if gram[(i, j)] != 0.0 {
                        e = e.add(&tv(a, i).mul(&tv(b, j)).scale(gram[(i, j)]));
                    }
                }
            }
            add_band(&mut prog, FAM_SECOND, e, p.s[(a, b)], p.eta);
        }
    }

    let lowrank_poly = |a: usize, k: usize| {
        let mut e = Polynomial::zero();
        for s in 0..ell {
            e.add_term(Monomial::from_vars(idx.tuple(k).iter().map(|&i| vv(a, s, i)).collect()), 1.0);
        }
        e
    };
    for a in 0..d {
        for k in 0..m {
            prog.add_equality(FAM_LOW_RANK, tv(a, k).sub(&lowrank_poly(a, k)));
        }
    }
    // Products of low-rank identities, linking the degree-2 block on T to the v blocks.
    for a in 0..d {
        for b in a..d {
            for i in 0..m {
                let j0 = if a == b { i } else { 0 };
                for j in j0..m {
                    let lhs = tv(a, i).mul(&tv(b, j));
                    let rhs = lowrank_poly(a, i).mul(&lowrank_poly(b, j));
                    prog.add_equality(FAM_LOW_RANK_LIFT, lhs.sub(&rhs));
                }
            }
        }
    }
    for a in 0..d {
        let norm = sum_of_squares((0..m).map(|k| (t[a * m + k], idx.multiplicity(k) as f64)));
        prog.add_inequality(FAM_T_BOUND, Polynomial::constant(p.radius * p.radius).sub(&norm));
    }
    for k in 0..m {
        for col in 0..m {
            let mut e = Polynomial::constant(if k == col { -1.0 } else { 0.0 });
            for a in 0..d {
                e = e.add(&var(l[k * d + a]).mul(&tv(a, col)));
            }
            prog.add_equality(FAM_LEFT_INVERSE, e);
        }
    }
    let sigma_half = sqrt_psd(p.sigma.sym());
    let dh = DMatrix::from_fn(m, m, |i, j| w[i] * sigma_half[(i, j)]);
    for k in 0..m {
        for col in 0..m {
            let mut e = Polynomial::constant(if k == col { -1.0 } else { 0.0 });
            for a in 0..d {
                for i in 0..m {
                    if dh[(i, col)] != 0.0 {
                        e = e.add(&var(pv[k * d + a]).mul(&tv(a, i)).scale(dh[(i, col)]));
                    }
                }
            }
            prog.add_equality(FAM_INVERSE_P, e);
        }
    }
    let rw = (r as f64).powi(omega as i32);
    let l_cap = rw / (p.kappa * p.kappa);
    let p_cap = rw * (omega as f64).powf(omega as f64 / 2.0) / (p.kappa * p.kappa);
    prog.add_inequality(FAM_L_BOUND, Polynomial::constant(l_cap).sub(&sum_of_squares(l.iter().map(|&x| (x, 1.0)))));
    prog.add_inequality(FAM_P_BOUND, Polynomial::constant(p_cap).sub(&sum_of_squares(pv.iter().map(|&x| (x, 1.0)))));

    for a in 0..d {
        for x in 0..r {
            let mut e = var(f[a * r + x]);
            for (k, c) in f_stencil(&idx, r, omega, x) {
                e = e.sub(&tv(a, k).scale(c));
            }
            prog.add_equality(FAM_F_DEFINITION, e);
        }
    }

    if let Some((lam, mu)) = &p.combos {
        let fcombo = |wt: &DVector<f64>, i: usize, j: usize| {
            let mut e = Polynomial::zero();
            for a in 0..d {
                e = e.add(&var(f[a * r + i]).mul(&var(f[a * r + j])).scale(wt[a]));
            }
            e
        };
        for i in 0..r {
            for j in (i + 1)..r {
                prog.add_equality(FAM_DIAGONAL, fcombo(lam, i, j));
            }
        }
        for i in 0..r {
            for j in (i + 1)..r {
                prog.add_inequality(FAM_SORTED, fcombo(lam, j, j).sub(&fcombo(lam, i, i)));
            }
        }
        for j in 1..r {
            prog.add_inequality(FAM_FIRST_ROW, fcombo(mu, 0, j));
        }
    }

    let mut c0: Vec<u32> = t.clone();
    c0.extend(&f);
    c0.extend(&l);
    c0.extend(&pv);
    prog.add_clique(c0, 2);
    for a in 0..d {
        for b in a..d {
            let mut vars: Vec<u32> = (0..ell * r).map(|n| v[a * ell * r + n]).collect();
            if b != a {
                vars.extend((0..ell * r).map(|n| v[b * ell * r + n]));
            }
            prog.add_clique(vars, p.degree);
        }
    }
    prog.validate()?;
    Ok(LowRankEncoding {
        program: prog,
        r,
        d,
        omega,
        ell,
        m,
        t,
        v,
        f,
        l,
        p: pv,
        sigma_half,
        sigma: p.sigma.clone(),
    })
}
