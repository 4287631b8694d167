//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
/// Column `k` of the returned matrix is the eigenvector for value `k`.
pub fn sym_eigen_ascending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Euclidean projection of a symmetric matrix onto the PSD cone.
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, m[(0, 0)].max(0.0));
    }
    let (vals, vecs) = sym_eigen_ascending(m);
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        if vals[k] > 0.0 {
            let v = vecs.column(k);
            out += vals[k] * v * v.transpose();
        }
    }
    out
}

/// Square root of a PSD matrix (negative eigenvalues clipped).
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let (vals, vecs) = sym_eigen_ascending(m);
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let v = vecs.column(k);
        out += vals[k].max(0.0).sqrt() * v * v.transpose();
    }
    out
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(r: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..r {
        if rr[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// Standard Gaussian vector.
pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Nearest orthogonal matrix (polar factor).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    u * vt
}

/// Deviation of `m` from orthogonality, max-abs of `m mᵀ - I`.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let g = m * m.transpose() - DMatrix::<f64>::identity(n, n);
    g.amax()
}

/// Solve `a x = b` for symmetric positive (semi)definite `a`, falling back
/// to an SVD pseudo-inverse when Cholesky fails.
pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12 * svd.singular_values.max().max(1e-300))
        .map_err(|e| Error::degenerate(format!("linear solve failed: {e}")))
}

/// Orthonormal basis of the null space of `m` (columns), with relative
/// singular-value threshold `tol`.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Work on the Gram matrix so the full right-singular basis is available.
    let gram = m.transpose() * m;
    let (vals, vecs) = sym_eigen_ascending(&gram);
    let top = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let thresh = (tol * top.max(1.0)).max(1e-300);
    let keep: Vec<usize> = (0..cols).filter(|&k| vals[k] <= thresh).collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        out.set_column(dst, &vecs.column(src));
    }
    out
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{domain, stream};

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let (vals, vecs) = sym_eigen_ascending(&m);
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let rec = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((rec - m).amax() < 1e-12);
    }

    #[test]
    fn psd_projection_clips_negative_part() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let p = project_psd(&m);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(p[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = stream(1, domain::GAUGE, 0);
        let q = random_orthogonal(5, &mut rng);
        assert!(orthogonality_defect(&q) < 1e-12);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&m * &n).amax() < 1e-12);
    }
}
