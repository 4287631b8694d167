//! Damped Gauss-Newton (Levenberg-Marquardt) for small dense problems.

use nalgebra::{DMatrix, DVector};

/// A nonlinear least-squares problem `min ‖r(x)‖²`.
pub trait LeastSquares {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Jacobian of the residuals. Defaults to central differences.
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let r0 = self.residuals(x);
        let mut jac = DMatrix::zeros(r0.len(), x.len());
        let mut xp = x.clone();
        for k in 0..x.len() {
            let h = 1e-6 * x[k].abs().max(1.0);
            xp[k] = x[k] + h;
            let rp = self.residuals(&xp);
            xp[k] = x[k] - h;
            let rm = self.residuals(&xp);
            xp[k] = x[k];
            jac.set_column(k, &((rp - rm) / (2.0 * h)));
        }
        jac
    }
}

#[derive(Debug, Clone)]
pub struct LmConfig {
    pub max_iter: usize,
    /// Stop once `‖r‖²` falls below this.
    pub tol_cost: f64,
    /// Stop once `‖Jᵀr‖∞` falls below this.
    pub tol_grad: f64,
    /// Stop once the relative step length falls below this.
    pub tol_step: f64,
    pub lambda0: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig { max_iter: 200, tol_cost: 1e-28, tol_grad: 1e-15, tol_step: 1e-15, lambda0: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub x: DVector<f64>,
    /// Final `‖r‖²`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn levenberg_marquardt<P: LeastSquares + ?Sized>(
    problem: &P,
    x0: DVector<f64>,
    cfg: &LmConfig,
) -> LmReport {
    let mut x = x0;
    let mut r = problem.residuals(&x);
    let mut cost = r.norm_squared();
    let mut lambda = cfg.lambda0;
    let mut nu = 2.0;
    let n = x.len();
    let mut iterations = 0;
    let mut converged = cost <= cfg.tol_cost;
    let mut jac = problem.jacobian(&x);

    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let g = jac.transpose() * &r;
        if g.amax() <= cfg.tol_grad {
            converged = true;
            break;
        }
        let a = jac.transpose() * &jac;
        let diag_scale = a.diagonal().amax().max(1e-12);
        let mut damped = a.clone();
        for k in 0..n {
            damped[(k, k)] += lambda * a[(k, k)].max(1e-9 * diag_scale);
        }
        let step = match damped.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => {
                lambda *= nu;
                nu *= 2.0;
                continue;
            }
        };
        let x_new = &x + &step;
        let r_new = problem.residuals(&x_new);
        let cost_new = r_new.norm_squared();
        if cost_new.is_finite() && cost_new < cost {
            // Gain ratio against the linear model (Nielsen's rule).
            let predicted = -(2.0 * step.dot(&g) + step.dot(&(&a * &step)));
            let rho = (cost - cost_new) / predicted.max(1e-300);
            lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
            let small_step = step.norm() <= cfg.tol_step * (x.norm() + cfg.tol_step);
            x = x_new;
            r = r_new;
            cost = cost_new;
            if cost <= cfg.tol_cost || small_step {
                converged = true;
                break;
            }
            jac = problem.jacobian(&x);
        } else {
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e16 {
                break;
            }
        }
    }
    LmReport { x, cost, iterations, converged }
}
