use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::gaussian_vector;
use crate::rng::{domain, stream};

const MAX_ATTEMPTS: u64 = 10;

fn contract(t: &[f64], d: usize, x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |a, b| (0..d).map(|c| t[(a * d + b) * d + c] * x[c]).sum())
}

/// Components of a symmetric order-3 tensor `T = Σ_i v_i^{⊗3}` with linearly
/// independent `v_i`, by simultaneous diagonalization of two random slices.
/// `t` is row-major `d × d × d`. Components come back in no particular order.
pub fn jennrich_diagonal(t: &[f64], d: usize, rng_seed: u64) -> Result<Vec<DVector<f64>>> {
    if t.len() != d * d * d || d == 0 {
        return Err(Error::domain("tensor must have d³ entries"));
    }
    let scale = t.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    // Column space of the d × d² unfolding.
    let unfold = DMatrix::from_row_slice(d, d * d, t);
    let svd = unfold.svd(true, false);
    let u_full = svd.u.expect("requested");
    let smax = svd.singular_values.max();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let rank = order.iter().filter(|&&k| svd.singular_values[k] > 1e-9 * smax).count();
    let u = DMatrix::from_fn(d, rank, |i, j| u_full[(i, order[j])]);

    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream(rng_seed, domain::JENNRICH, attempt);
        let x = gaussian_vector(d, &mut rng);
        let y = gaussian_vector(d, &mut rng);
        let a = u.transpose() * contract(t, d, &x) * &u;
        let b = u.transpose() * contract(t, d, &y) * &u;
        let Some(b_inv) = b.clone().try_inverse() else { continue };
        let prod = &a * b_inv;
        let eig = prod.complex_eigenvalues();
        if eig.iter().any(|z| z.im.abs() > 1e-8 * (1.0 + z.re.abs())) {
            continue;
        }
        let mut vals: Vec<f64> = eig.iter().map(|z| z.re).collect();
        vals.sort_by(f64::total_cmp);
        let spread = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        if vals.windows(2).any(|w| w[1] - w[0] <= 1e-6 * spread) {
            continue;
        }
        let mut dirs = Vec::with_capacity(rank);
        for &lam in &vals {
            let shifted = &prod - DMatrix::identity(rank, rank) * lam;
            let svd = shifted.svd(false, true);
            let vt = svd.v_t.expect("requested");
            let k = svd.singular_values.imin();
            let w = vt.row(k).transpose();
            dirs.push((&u * w).normalize());
        }
        // Scales from the least-squares fit vec(T) = Σ α_i vec(u_i^{⊗3}).
        let design = DMatrix::from_fn(d * d * d, rank, |f, i| {
            let (p, q, s) = (f / (d * d), (f / d) % d, f % d);
            dirs[i][p] * dirs[i][q] * dirs[i][s]
        });
        let rhs = DVector::from_column_slice(t);
        let Ok(alpha) = design.svd(true, true).solve(&rhs, 1e-14) else { continue };
        return Ok(dirs.into_iter().zip(alpha.iter()).map(|(v, &al)| v * al.cbrt()).collect());
    }
    Err(Error::degenerate("random contractions kept producing degenerate eigenvalues"))
}

/// Dense `Σ_i v_i^{⊗3}`, row-major.
pub fn cubic_tensor(components: &[DVector<f64>]) -> Vec<f64> {
    let d = components.first().map_or(0, |v| v.len());
    let mut t = vec![0.0; d * d * d];
    for v in components {
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    t[(a * d + b) * d + c] += v[a] * v[b] * v[c];
                }
            }
        }
    }
    t
}
