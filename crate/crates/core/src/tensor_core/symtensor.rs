use nalgebra::{DMatrix, DVector};

use super::multiindex::{flat_index, unflatten, SortedIndices};
use super::DENSE_LIMIT;
use crate::error::{Error, Result};

/// Symmetric order-ω tensor on `R^r`, stored on sorted multi-indices in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    r: usize,
    omega: usize,
    values: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(r: usize, omega: usize) -> Self {
        let n = SortedIndices::new(r, omega).len();
        SymTensor { r, omega, values: vec![0.0; n] }
    }

    pub fn from_values(r: usize, omega: usize, values: Vec<f64>) -> Result<Self> {
        let n = SortedIndices::new(r, omega).len();
        if values.len() != n {
            return Err(Error::domain(format!(
                "expected {n} sorted entries for r={r}, ω={omega}, got {}",
                values.len()
            )));
        }
        Ok(SymTensor { r, omega, values })
    }

    /// `Σ_t v_t^{⊗ω}`.
    pub fn from_components(components: &[DVector<f64>], omega: usize) -> Result<Self> {
        let r = components
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::domain("no components"))?;
        let idx = SortedIndices::new(r, omega);
        let mut values = vec![0.0; idx.len()];
        for v in components {
            if v.len() != r {
                return Err(Error::domain("component dimension mismatch"));
            }
            for (k, t) in idx.tuples().iter().enumerate() {
                values[k] += t.iter().map(|&i| v[i]).product::<f64>();
            }
        }
        Ok(SymTensor { r, omega, values })
    }

    /// Symmetric matrix as an order-2 tensor.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::domain("matrix is not square"));
        }
        let r = m.nrows();
        let idx = SortedIndices::new(r, 2);
        let values = idx.tuples().iter().map(|t| 0.5 * (m[(t[0], t[1])] + m[(t[1], t[0])])).collect();
        Ok(SymTensor { r, omega: 2, values })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    /// Sorted-entry values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Entry at any (unsorted) multi-index.
    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.omega {
            return Err(Error::domain("multi-index has wrong order"));
        }
        let pos = rank_sorted(idx, self.r).ok_or_else(|| Error::domain("index out of range"))?;
        Ok(self.values[pos])
    }

    /// `⟨T, T'⟩` over all of `[r]^ω` (multiplicity-weighted sum on sorted entries).
    pub fn inner(&self, other: &SymTensor) -> Result<f64> {
        if self.r != other.r || self.omega != other.omega {
            return Err(Error::domain("tensor shapes differ"));
        }
        let idx = SortedIndices::new(self.r, self.omega);
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(idx.multiplicities())
            .map(|((a, b), &m)| m as f64 * a * b)
            .sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.inner(self).unwrap_or(0.0).max(0.0).sqrt()
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        let n = dense_len(self.r, self.omega)?;
        let values = (0..n)
            .map(|f| {
                let idx = unflatten(f, self.r, self.omega);
                self.values[rank_sorted(&idx, self.r).expect("in range")]
            })
            .collect();
        Ok(DenseTensor { r: self.r, omega: self.omega, values })
    }

    /// Order-2 tensor as a symmetric matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.omega != 2 {
            return Err(Error::domain("only order-2 tensors are matrices"));
        }
        let r = self.r;
        Ok(DMatrix::from_fn(r, r, |i, j| self.values[rank_sorted(&[i, j], r).unwrap()]))
    }

    /// Contraction of `k` index pairs `Σ_j T_{j₁j₁⋯j_kj_k ⋯}`, returned as a
    /// symmetric tensor of order `ω − 2k`.
    pub fn contract_pairs(&self, k: usize) -> Result<SymTensor> {
        let (r, omega) = (self.r, self.omega);
        if 2 * k > omega {
            return Err(Error::domain(format!("cannot contract {k} pairs of an order-{omega} tensor")));
        }
        let rest = omega - 2 * k;
        let out_idx = SortedIndices::new(r, rest);
        let mut idx = vec![0usize; omega];
        let mut values = vec![0.0; out_idx.len()];
        for (pos, tail) in out_idx.tuples().iter().enumerate() {
            idx[2 * k..].copy_from_slice(tail);
            for flat in 0..r.pow(k as u32) {
                let mut f = flat;
                for p in 0..k {
                    idx[2 * p] = f % r;
                    idx[2 * p + 1] = f % r;
                    f /= r;
                }
                values[pos] += self.get(&idx)?;
            }
        }
        SymTensor::from_values(r, rest, values)
    }

    pub fn scaled(&self, c: f64) -> SymTensor {
        SymTensor { r: self.r, omega: self.omega, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &SymTensor) -> Result<SymTensor> {
        if self.r != other.r || self.omega != other.omega {
            return Err(Error::domain("tensor shapes differ"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(SymTensor { r: self.r, omega: self.omega, values })
    }
}

/// Lexicographic rank of `sort(idx)` among sorted tuples, computed
/// combinatorially (no table needed).
pub(crate) fn rank_sorted(idx: &[usize], r: usize) -> Option<usize> {
    let mut s = idx.to_vec();
    s.sort_unstable();
    if s.last().is_some_and(|&m| m >= r) {
        return None;
    }
    let omega = s.len();
    let mut rank = 0usize;
    let mut lo = 0usize;
    for (pos, &v) in s.iter().enumerate() {
        let rem = omega - pos - 1;
        // Count tuples whose entry at `pos` is in [lo, v) with sorted tails.
        for c in lo..v {
            rank += super::multiindex::binomial((r - c + rem - 1) as u64, rem as u64) as usize;
        }
        lo = v;
    }
    Some(rank)
}

fn dense_len(r: usize, omega: usize) -> Result<usize> {
    let n = (r as u128).pow(omega as u32);
    if n > DENSE_LIMIT as u128 {
        return Err(Error::Resource(format!("dense tensor r^ω = {n} exceeds {DENSE_LIMIT}")));
    }
    Ok(n as usize)
}

/// Tensor over all of `[r]^ω`, row-major in the lexicographic index.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    pub(crate) r: usize,
    pub(crate) omega: usize,
    pub(crate) values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(r: usize, omega: usize, values: Vec<f64>) -> Result<Self> {
        let n = dense_len(r, omega)?;
        if values.len() != n {
            return Err(Error::domain(format!("expected {n} entries, got {}", values.len())));
        }
        Ok(DenseTensor { r, omega, values })
    }

    pub fn zeros(r: usize, omega: usize) -> Result<Self> {
        let n = dense_len(r, omega)?;
        Ok(DenseTensor { r, omega, values: vec![0.0; n] })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[flat_index(idx, self.r)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let f = flat_index(idx, self.r);
        self.values[f] = v;
    }

    pub fn vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &DenseTensor) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Largest deviation from permutation symmetry.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for f in 0..self.values.len() {
            let idx = unflatten(f, self.r, self.omega);
            let mut s = idx.clone();
            s.sort_unstable();
            worst = worst.max((self.values[f] - self.get(&s)).abs());
        }
        worst
    }

    /// Sorted-entry view; assumes (and does not check) symmetry.
    pub fn to_sym(&self) -> SymTensor {
        let idx = SortedIndices::new(self.r, self.omega);
        let values = idx.tuples().iter().map(|t| self.get(t)).collect();
        SymTensor { r: self.r, omega: self.omega, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_of_unsorted_index() {
        let t = SymTensor::from_values(2, 3, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.get(&[1, 0, 0]).unwrap(), 2.0);
        assert_eq!(t.get(&[1, 0, 1]).unwrap(), 3.0);
        assert!(t.get(&[2, 0, 0]).is_err());
    }

    #[test]
    fn rank_matches_enumeration() {
        for r in 1..5 {
            for omega in 1..5 {
                let s = SortedIndices::new(r, omega);
                for (k, t) in s.tuples().iter().enumerate() {
                    assert_eq!(rank_sorted(t, r), Some(k));
                }
            }
        }
    }

    #[test]
    fn frobenius_agrees_with_dense() {
        let v = vec![DVector::from_vec(vec![1.0, -2.0, 0.5]), DVector::from_vec(vec![0.3, 0.1, 1.0])];
        let t = SymTensor::from_components(&v, 3).unwrap();
        let d = t.to_dense().unwrap();
        assert!((t.frobenius() - d.frobenius()).abs() < 1e-12);
        assert!(d.asymmetry() == 0.0);
        assert_eq!(d.to_sym(), t);
    }

    #[test]
    fn value_count_invariant() {
        assert!(SymTensor::from_values(3, 2, vec![0.0; 5]).is_err());
        assert_eq!(SymTensor::zeros(3, 3).values().len(), 10);
    }
}
