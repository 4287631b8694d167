use nalgebra::{DMatrix, DVector};

use super::rotation_invariant::rotation_invariant_scale;
use crate::error::{Error, Result};
use crate::model::SeedDistribution;
use crate::tensor_core::multiindex::{unflatten, SortedIndices};
use crate::tensor_core::SymTensor;

/// Largest side (of either the dense or the symmetrized Σ) that is materialized.
pub const SIGMA_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaMode {
    /// Gaussian moment matrix `E[g^{⊗ω} (g^{⊗ω})ᵀ]`.
    Gaussian,
    /// Plain Frobenius inner product.
    Identity,
    /// Gaussian entries rescaled by `C_{D,2ω}`.
    RotationInvariant(f64),
}

/// The moment matrix Σ on sorted indices, with multiplicities `D`.
#[derive(Debug, Clone)]
pub struct SigmaMatrix {
    r: usize,
    omega: usize,
    mode: SigmaMode,
    indices: SortedIndices,
    sym: DMatrix<f64>,
}

/// `E[g_{i₁}⋯g_{i_ω} g_{j₁}⋯g_{j_ω}]` by Wick counting: the product over
/// coordinates of `(c−1)!!` when every count `c` is even, else 0.
pub fn gaussian_entry(i: &[usize], j: &[usize], r: usize) -> f64 {
    let mut counts = vec![0usize; r];
    for &k in i.iter().chain(j) {
        counts[k] += 1;
    }
    let mut out = 1.0;
    for c in counts {
        if c % 2 == 1 {
            return 0.0;
        }
        out *= double_factorial(c as i64 - 1);
    }
    out
}

pub(crate) fn double_factorial(n: i64) -> f64 {
    let mut out = 1.0;
    let mut k = n;
    while k > 1 {
        out *= k as f64;
        k -= 2;
    }
    out
}

impl SigmaMatrix {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn mode(&self) -> SigmaMode {
        self.mode
    }

    pub fn indices(&self) -> &SortedIndices {
        &self.indices
    }

    /// `Σ_sym`, indexed by sorted multi-indices.
    pub fn sym(&self) -> &DMatrix<f64> {
        &self.sym
    }

    /// Multiplicity diagonal `D`.
    pub fn d_diag(&self) -> DVector<f64> {
        DVector::from_iterator(self.indices.len(), self.indices.multiplicities().iter().map(|&m| m as f64))
    }

    /// Σ over all of `[r]^ω` (row-major lexicographic).
    pub fn full(&self) -> Result<DMatrix<f64>> {
        let n = (self.r as u128).pow(self.omega as u32);
        if n > SIGMA_LIMIT as u128 {
            return Err(Error::Resource(format!("dense Σ side r^ω = {n} exceeds {SIGMA_LIMIT}")));
        }
        let n = n as usize;
        let pos: Vec<usize> = (0..n)
            .map(|f| self.indices.position(&unflatten(f, self.r, self.omega)).expect("in range"))
            .collect();
        Ok(DMatrix::from_fn(n, n, |a, b| match self.mode {
            SigmaMode::Identity => f64::from(u8::from(a == b)),
            _ => self.sym[(pos[a], pos[b])],
        }))
    }

    /// `D t` for a symmetric tensor `t`.
    pub fn weighted(&self, t: &SymTensor) -> DVector<f64> {
        DVector::from_iterator(
            t.values().len(),
            t.values().iter().zip(self.indices.multiplicities()).map(|(v, &m)| v * m as f64),
        )
    }
}

/// Build Σ for order `ω` on `R^r` under the given seed distribution.
pub fn sigma_matrix(r: usize, omega: usize, seed: &SeedDistribution) -> Result<SigmaMatrix> {
    let mode = if seed.is_gaussian() {
        SigmaMode::Gaussian
    } else {
        SigmaMode::RotationInvariant(rotation_invariant_scale(seed, r, 2 * omega as u32)?)
    };
    build(r, omega, mode)
}

impl SigmaMatrix {
    pub fn with_mode(r: usize, omega: usize, mode: SigmaMode) -> Result<Self> {
        build(r, omega, mode)
    }
}

fn build(r: usize, omega: usize, mode: SigmaMode) -> Result<SigmaMatrix> {
    if (r as f64).powi(omega as i32) > 1e6 {
        return Err(Error::Resource(format!("r^ω = {r}^{omega} exceeds 10^6")));
    }
    let indices = SortedIndices::new(r, omega);
    let m = indices.len();
    if m > SIGMA_LIMIT {
        return Err(Error::Resource(format!("symmetrized Σ side {m} exceeds {SIGMA_LIMIT}")));
    }
    let sym = match mode {
        SigmaMode::Identity => {
            DMatrix::from_diagonal(&DVector::from_iterator(m, indices.multiplicities().iter().map(|&k| 1.0 / k as f64)))
        }
        SigmaMode::Gaussian | SigmaMode::RotationInvariant(_) => {
            let scale = match mode {
                SigmaMode::RotationInvariant(c) => c,
                _ => 1.0,
            };
            let mut s = DMatrix::zeros(m, m);
            for a in 0..m {
                for b in a..m {
                    let v = scale * gaussian_entry(indices.tuple(a), indices.tuple(b), r);
                    s[(a, b)] = v;
                    s[(b, a)] = v;
                }
            }
            s
        }
    };
    Ok(SigmaMatrix { r, omega, mode, indices, sym })
}

/// `⟨T_a, T_b⟩_Σ = vec(T_a)ᵀ Σ vec(T_b)`, evaluated on sorted indices as
/// `(D t_a)ᵀ Σ_sym (D t_b)`.
pub fn sigma_inner(ta: &SymTensor, tb: &SymTensor, sigma: &SigmaMatrix) -> Result<f64> {
    for t in [ta, tb] {
        if t.r() != sigma.r || t.omega() != sigma.omega {
            return Err(Error::domain("tensor does not match Σ dimensions"));
        }
    }
    let wa = sigma.weighted(ta);
    let wb = sigma.weighted(tb);
    Ok(wa.dot(&(&sigma.sym * wb)))
}

/// Dense reference: `vec(A)ᵀ Σ vec(B)` with the full matrix.
pub fn sigma_inner_dense(a: &[f64], b: &[f64], sigma: &SigmaMatrix) -> Result<f64> {
    let full = sigma.full()?;
    if a.len() != full.nrows() || b.len() != full.nrows() {
        return Err(Error::domain("vector length does not match Σ"));
    }
    let va = DVector::from_column_slice(a);
    let vb = DVector::from_column_slice(b);
    Ok(va.dot(&(full * vb)))
}
