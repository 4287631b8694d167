use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;
use crate::error::Error;
use crate::linalg::sym_eigen_ascending;
use crate::model::PolyNetwork;
use crate::moments::{exact_quadratic_moments, sigma_inner, QuadraticMomentTable, SigmaMatrix, SigmaMode};
use crate::rng::{stream, domain};
use crate::tensor_core::SymTensor;

fn one_var(degree: usize) -> (PolynomialProgram, u32) {
    let mut p = PolynomialProgram::new(degree);
    let x = p.add_var("x");
    (p, x)
}

fn feasible(p: &PolynomialProgram) -> Pseudoexpectation {
    match solve(p, &SolverConfig::default()).unwrap() {
        SolveOutcome::Feasible(pe) => pe,
        SolveOutcome::Infeasible { residual, .. } => panic!("unexpectedly infeasible, residual {residual}"),
    }
}

#[test]
fn fixed_value() {
    let (mut p, x) = one_var(2);
    p.add_equality("fix", Polynomial::var(x).sub(&Polynomial::constant(0.5)));
    let pe = feasible(&p);
    assert!((pseudo_expect(&pe, &Polynomial::var(x)).unwrap() - 0.5).abs() <= 1e-7);
    assert!((pseudo_expect(&pe, &Polynomial::constant(1.0)).unwrap() - 1.0).abs() <= 1e-8);
}

#[test]
fn unit_square_and_cauchy_schwarz() {
    let (mut p, x) = one_var(2);
    let x2 = Polynomial::var(x).mul(&Polynomial::var(x));
    p.add_equality("square", x2.sub(&Polynomial::constant(1.0)));
    let pe = feasible(&p);
    let ex = pseudo_expect(&pe, &Polynomial::var(x)).unwrap();
    let ex2 = pseudo_expect(&pe, &x2).unwrap();
    assert!((ex2 - 1.0).abs() <= 1e-7);
    assert!(ex * ex <= ex2 + 1e-6);
    assert!(pe.min_eigenvalue >= -1e-6);
    assert!((pe.moment_matrix(0)[(0, 0)] - 1.0).abs() <= 1e-8);
}

#[test]
fn negative_square_is_infeasible() {
    let (mut p, x) = one_var(2);
    let x2 = Polynomial::var(x).mul(&Polynomial::var(x));
    p.add_equality("square", x2.add(&Polynomial::constant(1.0)));
    assert!(matches!(solve(&p, &SolverConfig::default()).unwrap(), SolveOutcome::Infeasible { .. }));
}

#[test]
fn inequality_keeps_point_in_interval() {
    let (mut p, x) = one_var(2);
    let xv = Polynomial::var(x);
    p.add_inequality("lower", xv.sub(&Polynomial::constant(2.0)));
    p.add_inequality("upper", Polynomial::constant(3.0).sub(&xv));
    let pe = feasible(&p);
    let ex = pseudo_expect(&pe, &xv).unwrap();
    assert!(ex >= 2.0 - 1e-6 && ex <= 3.0 + 1e-6, "{ex}");
}

#[test]
fn degree_overflow_and_linearity() {
    let (mut p, x) = one_var(2);
    p.add_equality("fix", Polynomial::var(x).sub(&Polynomial::constant(0.5)));
    let pe = feasible(&p);
    let cubic = Polynomial::var(x).mul(&Polynomial::var(x)).mul(&Polynomial::var(x));
    assert!(matches!(pseudo_expect(&pe, &cubic), Err(Error::Domain(_))));
    let a = Polynomial::var(x).scale(3.0);
    let b = Polynomial::var(x).mul(&Polynomial::var(x)).add(&Polynomial::constant(-2.0));
    let lhs = pseudo_expect(&pe, &a.add(&b)).unwrap();
    let rhs = pseudo_expect(&pe, &a).unwrap() + pseudo_expect(&pe, &b).unwrap();
    assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs.abs().max(1.0));
}

#[test]
fn dimension_cap_is_resource_error() {
    let mut p = PolynomialProgram::new(4);
    for k in 0..10 {
        p.add_var(format!("x{k}"));
    }
    let cfg = SolverConfig { max_dim: 20, ..SolverConfig::default() };
    assert!(matches!(solve(&p, &cfg), Err(Error::Resource(_))));
}

#[test]
fn solver_is_deterministic() {
    let (mut p, x) = one_var(4);
    let x2 = Polynomial::var(x).mul(&Polynomial::var(x));
    p.add_equality("square", x2.sub(&Polynomial::constant(2.0)));
    let a = feasible(&p);
    let b = feasible(&p);
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.values(), b.values());
}

fn scalar_table(s: f64, t: f64) -> QuadraticMomentTable {
    QuadraticMomentTable::new(DVector::from_element(1, 0.0), DMatrix::from_element(1, 1, s), vec![t], 0.0).unwrap()
}

fn scalar_params(s: f64, t: f64, eta: f64) -> TensorRingParams {
    TensorRingParams {
        r: 1,
        moments: scalar_table(s, t),
        lambda: DVector::from_element(1, 1.0),
        mu: DVector::from_element(1, 1.0),
        radius: 2.0,
        kappa: 0.5,
        eta,
        degree: 4,
    }
}

#[test]
fn scalar_tensor_ring_hand_count() {
    let enc = encode_tensor_ring(&scalar_params(1.0, 1.0, 0.0)).unwrap();
    let prog = &enc.program;
    assert_eq!(prog.n_vars(), 2);
    let counts = prog.family_counts();
    assert_eq!(counts.len(), 9);
    let expected = [
        ("symmetry", 0),
        ("second_moments", 1),
        ("third_moments", 1),
        ("q_bounded", 1),
        ("left_inverse_l", 1),
        ("l_bounded", 1),
        ("lambda_diagonal", 0),
        ("lambda_sorted", 0),
        ("mu_first_row", 0),
    ];
    for (fam, n) in expected {
        assert_eq!(counts[fam], n, "{fam}");
    }
    assert_eq!(prog.equalities.len(), 3);
    assert_eq!(prog.inequalities.len(), 2);
}

#[test]
fn scalar_tensor_ring_recovers_unit() {
    let enc = encode_tensor_ring(&scalar_params(1.0, 1.0, 1e-8)).unwrap();
    let pe = feasible(&enc.program);
    let q = enc.expected_units(&pe).unwrap();
    assert!((q[0][(0, 0)] - 1.0).abs() <= 1e-3, "{}", q[0][(0, 0)]);
}

#[test]
fn low_degree_rejected() {
    let mut p = scalar_params(1.0, 1.0, 0.0);
    p.degree = 2;
    assert!(matches!(encode_tensor_ring(&p), Err(Error::Domain(_))));
}

#[test]
fn pseudo_squares_nonnegative() {
    let enc = encode_tensor_ring(&scalar_params(1.0, 1.0, 1e-8)).unwrap();
    let pe = feasible(&enc.program);
    let basis = pe.basis(0).to_vec();
    let mut rng = stream(11, domain::PROBE, 0);
    for _ in 0..100 {
        let mut p = Polynomial::zero();
        for m in &basis {
            p.add_term(m.clone(), rng.random_range(-1.0..1.0));
        }
        assert!(pseudo_expect(&pe, &p.mul(&p)).unwrap() >= -1e-6);
    }
}

/// Rotate units so `Q_λ` is diagonal ascending and the first row of `Q_μ` is nonnegative.
fn gauge_fixed(units: &[DMatrix<f64>], lam: &DVector<f64>, mu: &DVector<f64>) -> Vec<DMatrix<f64>> {
    let r = units[0].nrows();
    let comb = |w: &DVector<f64>, us: &[DMatrix<f64>]| us.iter().zip(w.iter()).fold(DMatrix::zeros(r, r), |acc, (u, &c)| acc + u * c);
    let (_, v) = sym_eigen_ascending(&comb(lam, units));
    let rotated: Vec<DMatrix<f64>> = units.iter().map(|u| v.transpose() * u * &v).collect();
    let qm = comb(mu, &rotated);
    let signs = DMatrix::from_diagonal(&DVector::from_fn(r, |j, _| if j == 0 || qm[(0, j)] >= 0.0 { 1.0 } else { -1.0 }));
    rotated.iter().map(|u| &signs * u * &signs).collect()
}

#[test]
fn tensor_ring_ground_truth_is_feasible() {
    let mut rng = stream(5, domain::SAMPLE, 0);
    let (r, d) = (2, 3);
    let units: Vec<DMatrix<f64>> = (0..d)
        .map(|_| {
            let a = DMatrix::from_fn(r, r, |_, _| rng.random_range(-1.0..1.0));
            (&a + a.transpose()) * 0.5
        })
        .collect();
    let lam = DVector::from_vec(vec![0.6, 0.8, 0.0]);
    let mu = DVector::from_vec(vec![0.0, 0.6, 0.8]);
    let fixed = gauge_fixed(&units, &lam, &mu);
    let net = PolyNetwork::quadratic(fixed.clone()).unwrap();
    let moments = exact_quadratic_moments(&net).unwrap();
    let params = TensorRingParams { r, moments, lambda: lam, mu, radius: 10.0, kappa: 1e-3, eta: 0.0, degree: 4 };
    let enc = encode_tensor_ring(&params).unwrap();
    let x = enc.ground_truth_point(&fixed).unwrap();
    assert!(enc.program.max_violation(&x) <= 1e-9, "{}", enc.program.max_violation(&x));
    assert!(enc.program.dump().contains("clique degree 4"));
}

fn lowrank_params(r: usize, d: usize, comps: &[Vec<DVector<f64>>], combos: Option<(DVector<f64>, DVector<f64>)>) -> LowRankParams {
    let sigma = SigmaMatrix::with_mode(r, 3, SigmaMode::Gaussian).unwrap();
    let tensors: Vec<SymTensor> = comps.iter().map(|c| SymTensor::from_components(c, 3).unwrap()).collect();
    let s = DMatrix::from_fn(d, d, |a, b| sigma_inner(&tensors[a], &tensors[b], &sigma).unwrap());
    LowRankParams { r, omega: 3, ell: comps[0].len(), s, sigma, combos, radius: 10.0, kappa: 1e-3, eta: 0.0, degree: 6 }
}

#[test]
fn scalar_lowrank_reads_cube() {
    let comps = vec![vec![DVector::from_element(1, 0.7)]];
    let enc = encode_lowrank(&lowrank_params(1, 1, &comps, None)).unwrap();
    let lr: Vec<_> = enc.program.equalities.iter().filter(|c| c.family == "low_rank").collect();
    assert_eq!(lr.len(), 1);
    let t = enc.t_var(0, 0);
    let v = enc.v_var(0, 0, 0);
    let expected = Polynomial::var(t).sub(&Polynomial::monomial(Monomial::from_vars(vec![v, v, v]), 1.0));
    assert_eq!(lr[0].poly, expected);
}

#[test]
fn lowrank_ground_truth_is_feasible() {
    let mut rng = stream(8, domain::SAMPLE, 0);
    let (r, d) = (2, 4);
    let comps: Vec<Vec<DVector<f64>>> = (0..d).map(|_| vec![DVector::from_fn(r, |_, _| rng.random_range(-1.0..1.0))]).collect();
    let enc = encode_lowrank(&lowrank_params(r, d, &comps, None)).unwrap();
    let x = enc.ground_truth_point(&comps).unwrap();
    assert!(enc.program.max_violation(&x) <= 1e-9, "{}", enc.program.max_violation(&x));
}

#[test]
fn lowrank_sigma_half_squares_back() {
    let comps: Vec<Vec<DVector<f64>>> = (0..4).map(|a| vec![DVector::from_vec(vec![1.0, a as f64 * 0.3])]).collect();
    let enc = encode_lowrank(&lowrank_params(2, 4, &comps, None)).unwrap();
    let h = enc.sigma_half();
    assert!((h * h - enc.sigma().sym()).amax() <= 1e-10);
}

#[test]
fn lowrank_degree_and_parity_checked() {
    let comps = vec![vec![DVector::from_element(1, 0.7)]];
    let mut p = lowrank_params(1, 1, &comps, None);
    p.degree = 4;
    assert!(matches!(encode_lowrank(&p), Err(Error::Domain(_))));
}

#[test]
fn scalar_lowrank_with_combos_solves() {
    let comps = vec![vec![DVector::from_element(1, 0.7)]];
    let one = DVector::from_element(1, 1.0);
    let enc = encode_lowrank(&lowrank_params(1, 1, &comps, Some((one.clone(), one)))).unwrap();
    assert_eq!(enc.program.family_counts().len(), 13);
    let pe = feasible(&enc.program);
    let t2 = Polynomial::var(enc.t_var(0, 0)).mul(&Polynomial::var(enc.t_var(0, 0)));
    // ⟨T,T⟩_Σ = 15 t² for r = 1, ω = 3.
    assert!((15.0 * pseudo_expect(&pe, &t2).unwrap() - 15.0 * 0.7f64.powi(6)).abs() <= 1e-5);
}
