use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::poly::Polynomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Constraint {
    pub poly: Polynomial,
    pub family: String,
}

/// A group of variables that gets its own moment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Clique {
    pub vars: Vec<u32>,
    pub degree: usize,
}

/// Polynomial equalities `p = 0` and inequalities `p ≥ 0` with a declared
/// relaxation degree and an optional clique structure.
#[derive(Debug, Clone)]
pub struct PolynomialProgram {
    names: Vec<String>,
    index: HashMap<String, u32>,
    pub equalities: Vec<Constraint>,
    pub inequalities: Vec<Constraint>,
    pub degree: usize,
    cliques: Vec<Clique>,
    /// Instantiated constraints per family, including identically-zero ones.
    families: BTreeMap<String, usize>,
}

impl PolynomialProgram {
    pub fn new(degree: usize) -> Self {
        PolynomialProgram {
            names: Vec::new(),
            index: HashMap::new(),
            equalities: Vec::new(),
            inequalities: Vec::new(),
            degree,
            cliques: Vec::new(),
            families: BTreeMap::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> u32 {
        let name = name.into();
        if let Some(&k) = self.index.get(&name) {
            return k;
        }
        let k = self.names.len() as u32;
        self.index.insert(name.clone(), k);
        self.names.push(name);
        k
    }

    pub fn var(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn var_name(&self, v: u32) -> &str {
        &self.names[v as usize]
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    /// Register a family even when it has no instances.
    pub fn declare_family(&mut self, family: &str) {
        self.families.entry(family.to_string()).or_insert(0);
    }

    pub fn add_equality(&mut self, family: &str, poly: Polynomial) {
        *self.families.entry(family.to_string()).or_insert(0) += 1;
        if !poly.is_zero() {
            self.equalities.push(Constraint { poly, family: family.to_string() });
        }
    }

    pub fn add_inequality(&mut self, family: &str, poly: Polynomial) {
        *self.families.entry(family.to_string()).or_insert(0) += 1;
        if !poly.is_zero() {
            self.inequalities.push(Constraint { poly, family: family.to_string() });
        }
    }

    pub fn add_clique(&mut self, mut vars: Vec<u32>, degree: usize) {
        vars.sort_unstable();
        vars.dedup();
        self.cliques.push(Clique { vars, degree });
    }

    /// Declared cliques, or one clique over every variable at the program degree.
    pub fn cliques(&self) -> Vec<Clique> {
        if self.cliques.is_empty() {
            vec![Clique { vars: (0..self.names.len() as u32).collect(), degree: self.degree }]
        } else {
            self.cliques.clone()
        }
    }

    pub fn family_counts(&self) -> &BTreeMap<String, usize> {
        &self.families
    }

    /// Check the declared-degree and declared-variable invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.names.len() as u32;
        for c in self.equalities.iter().chain(&self.inequalities) {
            if c.poly.degree() > self.degree {
                return Err(Error::domain(format!(
                    "constraint of family '{}' has degree {} above the relaxation degree {}",
                    c.family,
                    c.poly.degree(),
                    self.degree
                )));
            }
            if c.poly.variables().iter().any(|&v| v >= n) {
                return Err(Error::domain(format!("constraint of family '{}' uses an undeclared variable", c.family)));
            }
        }
        for cl in &self.cliques {
            if cl.degree > self.degree || cl.vars.iter().any(|&v| v >= n) {
                return Err(Error::domain("clique exceeds program degree or uses undeclared variables"));
            }
        }
        Ok(())
    }

    /// Largest violation at a point: `|p|` for equalities, `max(0, −p)` for inequalities.
    pub fn max_violation(&self, point: &[f64]) -> f64 {
        let eq = self.equalities.iter().map(|c| c.poly.evaluate(point).abs());
        let ineq = self.inequalities.iter().map(|c| (-c.poly.evaluate(point)).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    /// Human-readable listing of the program.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "degree {}", self.degree);
        let _ = writeln!(out, "variables {}", self.names.len());
        for (k, n) in self.names.iter().enumerate() {
            let _ = writeln!(out, "  x{k} = {n}");
        }
        for cl in self.cliques() {
            let side = super::poly::Monomial::basis(&cl.vars, cl.degree / 2).len();
            let _ = writeln!(out, "clique degree {} vars {} moment-matrix side {}", cl.degree, cl.vars.len(), side);
        }
        let _ = writeln!(out, "families");
        for (f, c) in &self.families {
            let _ = writeln!(out, "  {f}: {c}");
        }
        for c in &self.equalities {
            let _ = writeln!(out, "[{}] {} = 0", c.family, c.poly);
        }
        for c in &self.inequalities {
            let _ = writeln!(out, "[{}] {} >= 0", c.family, c.poly);
        }
        out
    }
}
