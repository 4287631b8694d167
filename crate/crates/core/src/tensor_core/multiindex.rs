use std::collections::HashMap;

use crate::error::{Error, Result};

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product::<u64>().max(1)
}

/// Number of tuples in `[r]^ω` that sort to `sort(i)`. Indices are 0-based.
pub fn multiplicity(idx: &[usize], r: usize) -> Result<u64> {
    if let Some(&bad) = idx.iter().find(|&&k| k >= r) {
        return Err(Error::domain(format!("index {bad} out of range for dimension {r}")));
    }
    Ok(multiplicity_unchecked(idx))
}

pub(crate) fn multiplicity_unchecked(idx: &[usize]) -> u64 {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    let mut out = factorial(sorted.len() as u64);
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            out /= run;
        } else {
            run = 1;
        }
    }
    out
}

/// Enumeration of the sorted multi-indices of `[r]^ω` in lexicographic order,
/// with a reverse lookup.
#[derive(Debug, Clone)]
pub struct SortedIndices {
    r: usize,
    omega: usize,
    tuples: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
    mult: Vec<u64>,
}

impl SortedIndices {
    pub fn new(r: usize, omega: usize) -> Self {
        let mut tuples = Vec::new();
        if r > 0 {
            let mut cur = vec![0usize; omega];
            loop {
                tuples.push(cur.clone());
                // Advance to the next nondecreasing tuple.
                let mut pos = omega;
                while pos > 0 && cur[pos - 1] == r - 1 {
                    pos -= 1;
                }
                if pos == 0 {
                    break;
                }
                let v = cur[pos - 1] + 1;
                for slot in cur.iter_mut().skip(pos - 1) {
                    *slot = v;
                }
            }
        }
        let lookup = tuples.iter().enumerate().map(|(k, t)| (t.clone(), k)).collect();
        let mult = tuples.iter().map(|t| multiplicity_unchecked(t)).collect();
        SortedIndices { r, omega, tuples, lookup, mult }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple(&self, k: usize) -> &[usize] {
        &self.tuples[k]
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn multiplicity(&self, k: usize) -> u64 {
        self.mult[k]
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.mult
    }

    /// Position of `sort(idx)`; `None` if an entry is out of range.
    pub fn position(&self, idx: &[usize]) -> Option<usize> {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.lookup.get(&s).copied()
    }
}

/// Row-major flat index of a (not necessarily sorted) multi-index.
pub fn flat_index(idx: &[usize], r: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * r + i)
}

/// Inverse of [`flat_index`].
pub fn unflatten(mut flat: usize, r: usize, omega: usize) -> Vec<usize> {
    let mut out = vec![0; omega];
    for slot in out.iter_mut().rev() {
        *slot = flat % r;
        flat /= r;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity(&[0, 0, 1], 2).unwrap(), 3);
        assert_eq!(multiplicity(&[0, 1], 2).unwrap(), 2);
        assert_eq!(multiplicity(&[0, 0, 0], 1).unwrap(), 1);
        assert!(matches!(multiplicity(&[0, 2], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn counts_and_multiplicity_sums() {
        for r in 1..=5usize {
            for omega in 1..=5usize {
                let s = SortedIndices::new(r, omega);
                assert_eq!(s.len() as u64, binomial((r + omega - 1) as u64, omega as u64));
                let total: u64 = s.multiplicities().iter().sum();
                assert_eq!(total, (r as u64).pow(omega as u32));
            }
        }
    }

    #[test]
    fn lexicographic_order() {
        let s = SortedIndices::new(3, 2);
        let expect = [[0, 0], [0, 1], [0, 2], [1, 1], [1, 2], [2, 2]];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(s.tuple(k), e);
        }
        assert_eq!(s.position(&[2, 1]), Some(4));
    }

    proptest! {
        #[test]
        fn flat_roundtrip(r in 1usize..6, omega in 1usize..5, seed in 0usize..10_000) {
            let flat = seed % r.pow(omega as u32);
            prop_assert_eq!(flat_index(&unflatten(flat, r, omega), r), flat);
        }
    }
}
