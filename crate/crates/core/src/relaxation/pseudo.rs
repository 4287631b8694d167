use std::collections::HashMap;

use nalgebra::DMatrix;

use super::poly::{Monomial, Polynomial};
use crate::error::{Error, Result};

/// Linear functional on the monomials supported by a solved relaxation.
#[derive(Debug, Clone)]
pub struct Pseudoexpectation {
    degree: usize,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    values: Vec<f64>,
    bases: Vec<Vec<Monomial>>,
    matrices: Vec<DMatrix<f64>>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub min_eigenvalue: f64,
}

impl Pseudoexpectation {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        degree: usize,
        monomials: Vec<Monomial>,
        index: HashMap<Monomial, usize>,
        values: Vec<f64>,
        bases: Vec<Vec<Monomial>>,
        matrices: Vec<DMatrix<f64>>,
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        min_eigenvalue: f64,
    ) -> Self {
        Pseudoexpectation {
            degree,
            monomials,
            index,
            values,
            bases,
            matrices,
            iterations,
            primal_residual,
            dual_residual,
            min_eigenvalue,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, m: &Monomial) -> Option<f64> {
        self.index.get(m).map(|&k| self.values[k])
    }

    /// Moment matrix of clique `k`, rows and columns indexed by `basis(k)`.
    pub fn moment_matrix(&self, k: usize) -> &DMatrix<f64> {
        &self.matrices[k]
    }

    pub fn basis(&self, k: usize) -> &[Monomial] {
        &self.bases[k]
    }

    pub fn n_cliques(&self) -> usize {
        self.matrices.len()
    }
}

/// Evaluate Ẽ on a polynomial whose monomials all lie in the solved support.
pub fn pseudo_expect(pe: &Pseudoexpectation, p: &Polynomial) -> Result<f64> {
    if p.degree() > pe.degree {
        return Err(Error::domain(format!(
            "polynomial degree {} exceeds relaxation degree {}",
            p.degree(),
            pe.degree
        )));
    }
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let v = pe
            .value(m)
            .ok_or_else(|| Error::domain(format!("monomial of degree {} is outside the relaxation support", m.degree())))?;
        acc += c * v;
    }
    Ok(acc)
}
