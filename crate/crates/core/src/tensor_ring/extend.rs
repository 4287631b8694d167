use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Coordinates of a symmetric matrix such that the Frobenius inner product
/// with another symmetric matrix is linear: `⟨A, Q⟩ = Σ_k coords(A)_k q_k` with
/// `q` the upper triangle of `Q`.
fn frobenius_row(a: &DMatrix<f64>) -> Vec<f64> {
    let r = a.nrows();
    let mut row = Vec::with_capacity(r * (r + 1) / 2);
    for i in 0..r {
        for j in i..r {
            row.push(if i == j { a[(i, i)] } else { a[(i, j)] + a[(j, i)] });
        }
    }
    row
}

fn from_upper(x: &DVector<f64>, r: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(r, r);
    let mut k = 0;
    for i in 0..r {
        for j in i..r {
            q[(i, j)] = x[k];
            q[(j, i)] = x[k];
            k += 1;
        }
    }
    q
}

/// Pre-factored least-squares map from `(S_{a b})_{a ≤ d'}` to `Q̂_b`.
#[derive(Debug, Clone)]
pub struct TailSolver {
    r: usize,
    /// `(HᵀH)⁻¹Hᵀ`, `m × d'`.
    pinv: DMatrix<f64>,
    /// `HᵀH`, kept for the spectrum.
    normal: DMatrix<f64>,
}

impl TailSolver {
    pub fn new(head: &[DMatrix<f64>]) -> Result<Self> {
        let r = head.first().ok_or_else(|| Error::domain("empty head"))?.nrows();
        let m = r * (r + 1) / 2;
        if head.len() < m {
            return Err(Error::domain(format!("head size {} is below C(r+1,2) = {m}", head.len())));
        }
        let rows: Vec<f64> = head.iter().flat_map(frobenius_row).collect();
        let h = DMatrix::from_row_slice(head.len(), m, &rows);
        let ht = h.transpose();
        let hth = &ht * &h;
        let chol = hth.clone().cholesky().ok_or_else(|| Error::degenerate("head normal matrix is singular"))?;
        // Cholesky pivots bound the spectrum of HᵀH from inside, so a tiny pivot ratio means a rank-deficient head.
        let pivots = chol.l_dirty().diagonal().map(|p| p * p);
        if !(pivots.min() > 1e-14 * pivots.max()) {
            return Err(Error::degenerate("head units do not span the symmetric matrices"));
        }
        Ok(TailSolver { r, pinv: chol.solve(&ht), normal: hth })
    }

    /// Smallest singular value of the head design.
    pub fn sigma_min(&self) -> f64 {
        self.normal.symmetric_eigenvalues().min().max(0.0).sqrt()
    }

    pub fn solve_unit(&self, s_column: &DVector<f64>) -> DMatrix<f64> {
        from_upper(&(&self.pinv * s_column), self.r)
    }
}

/// Tail units `Q̂_b`, `b = d'..d`, from the head and the cross moments `s(a, b)`
/// with `a < d'`. Reads only `d'·(d − d')` entries.
pub fn extend_tail<F: Fn(usize, usize) -> f64>(s: F, head: &[DMatrix<f64>], d: usize) -> Result<Vec<DMatrix<f64>>> {
    let dp = head.len();
    if d < dp {
        return Err(Error::domain("d is smaller than the head"));
    }
    if d == dp {
        return Ok(Vec::new());
    }
    let solver = TailSolver::new(head)?;
    let mut col = DVector::zeros(dp);
    Ok((dp..d)
        .map(|b| {
            for a in 0..dp {
                col[a] = s(a, b);
            }
            solver.solve_unit(&col)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::smoothed_quadratic_instance;
    use crate::moments::exact_quadratic_moments;
    use crate::rng::{domain, stream};
    use rand::Rng;

    #[test]
    fn exact_head_gives_exact_tail() {
        let net = smoothed_quadratic_instance(2, 20, 0.5, 3).unwrap();
        let units = net.quadratic_units().unwrap();
        let s = exact_quadratic_moments(&net).unwrap().s;
        let tail = extend_tail(|a, b| s[(a, b)], &units[..3], 20).unwrap();
        for (q, t) in units[3..].iter().zip(&tail) {
            assert!((q - t).amax() <= 1e-9);
        }
        assert!(extend_tail(|a, b| s[(a, b)], &units[..3], 3).unwrap().is_empty());
    }

    #[test]
    fn rank_deficient_head() {
        let head = vec![DMatrix::identity(2, 2); 3];
        assert!(matches!(extend_tail(|_, _| 1.0, &head, 5), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn perturbation_scale() {
        let eta = 1e-6;
        let net = smoothed_quadratic_instance(2, 10, 0.5, 8).unwrap();
        let units = net.quadratic_units().unwrap();
        let s = exact_quadratic_moments(&net).unwrap().s;
        let mut rng = stream(1, domain::NOISE, 0);
        let noisy = s.map(|x| x + rng.random_range(-eta..eta));
        let head = &units[..3];
        let solver = TailSolver::new(head).unwrap();
        let radius = net.radius();
        let bound = eta * radius * 3f64.sqrt() / solver.sigma_min().powi(2);
        let tail = extend_tail(|a, b| noisy[(a, b)], head, 10).unwrap();
        for (q, t) in units[3..].iter().zip(&tail) {
            assert!((q - t).norm() <= bound.max(eta * 10.0 / solver.sigma_min()), "{} vs {bound}", (q - t).norm());
        }
    }
}
