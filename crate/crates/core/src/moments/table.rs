//! Moment table file format.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::pair::PairMomentTable;
use super::quadratic::QuadraticMomentTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MomentTable {
    Quadratic(QuadraticMomentTable),
    Pair(PairMomentTable),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TableFile {
    Quadratic {
        mu: Vec<f64>,
        #[serde(rename = "S")]
        s: Vec<Vec<f64>>,
        #[serde(rename = "T")]
        t: Vec<Vec<Vec<f64>>>,
        eta: f64,
    },
    Pair {
        #[serde(rename = "S")]
        s: Vec<Vec<f64>>,
        eta: f64,
    },
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Usage(format!("expected a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl MomentTable {
    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(&self.to_file())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        match file {
            TableFile::Quadratic { mu, s, t, eta } => {
                let d = mu.len();
                let s = from_rows(&s, d)?;
                if t.len() != d || t.iter().any(|m| m.len() != d || m.iter().any(|r| r.len() != d)) {
                    return Err(Error::Usage(format!("T must be {d}x{d}x{d}")));
                }
                let flat = t.into_iter().flatten().flatten().collect();
                Ok(MomentTable::Quadratic(QuadraticMomentTable::new(DVector::from_vec(mu), s, flat, eta)?))
            }
            TableFile::Pair { s, eta } => {
                let d = s.len();
                Ok(MomentTable::Pair(PairMomentTable::new(from_rows(&s, d)?, eta)?))
            }
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_json(path, &self.to_file())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn to_file(&self) -> TableFile {
        match self {
            MomentTable::Quadratic(q) => {
                let d = q.d();
                TableFile::Quadratic {
                    mu: q.mu.iter().copied().collect(),
                    s: rows(&q.s),
                    t: (0..d).map(|a| (0..d).map(|b| (0..d).map(|c| q.t(a, b, c)).collect()).collect()).collect(),
                    eta: q.eta,
                }
            }
            MomentTable::Pair(p) => TableFile::Pair { s: rows(&p.s), eta: p.eta },
        }
    }
}
