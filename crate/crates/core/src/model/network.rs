use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_core::{DenseTensor, SymTensor};

/// Unit parameters of a network.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkKind {
    /// `z_a = xᵀ Q_a x`.
    Quadratic(Vec<DMatrix<f64>>),
    /// `z_a = Σ_t ⟨v_{a,t}, x⟩^ω`.
    LowRank { omega: usize, components: Vec<Vec<DVector<f64>>> },
}

/// A homogeneous polynomial network `x ↦ (⟨T_a, x^{⊗ω}⟩)_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyNetwork {
    r: usize,
    kind: NetworkKind,
    rho: Option<f64>,
}

impl PolyNetwork {
    pub fn quadratic(units: Vec<DMatrix<f64>>) -> Result<Self> {
        let r = units.first().map(|q| q.nrows()).ok_or_else(|| Error::domain("network has no units"))?;
        if r == 0 {
            return Err(Error::domain("r must be positive"));
        }
        for (a, q) in units.iter().enumerate() {
            if q.nrows() != r || q.ncols() != r {
                return Err(Error::domain(format!("unit {a} is not {r}x{r}")));
            }
            let asym = (q - q.transpose()).amax();
            if asym > 1e-12 * q.amax().max(1.0) {
                return Err(Error::domain(format!("unit {a} is not symmetric (defect {asym:e})")));
            }
            if q.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("unit {a} has non-finite entries")));
            }
        }
        let units = units.into_iter().map(|q| (&q + q.transpose()) * 0.5).collect();
        Ok(PolyNetwork { r, kind: NetworkKind::Quadratic(units), rho: None })
    }

    pub fn lowrank(omega: usize, components: Vec<Vec<DVector<f64>>>) -> Result<Self> {
        if omega < 3 || omega % 2 == 0 {
            return Err(Error::domain(format!("low-rank networks need odd ω ≥ 3, got {omega}")));
        }
        let first = components.first().ok_or_else(|| Error::domain("network has no units"))?;
        let ell = first.len();
        let r = first.first().map(|v| v.len()).ok_or_else(|| Error::domain("unit has no components"))?;
        if r == 0 {
            return Err(Error::domain("r must be positive"));
        }
        for (a, unit) in components.iter().enumerate() {
            if unit.len() != ell {
                return Err(Error::domain(format!("unit {a} has {} components, expected {ell}", unit.len())));
            }
            if unit.iter().any(|v| v.len() != r || v.iter().any(|x| !x.is_finite())) {
                return Err(Error::domain(format!("unit {a} has a malformed component")));
            }
        }
        Ok(PolyNetwork { r, kind: NetworkKind::LowRank { omega, components }, rho: None })
    }

    pub fn with_rho(mut self, rho: Option<f64>) -> Self {
        self.rho = rho;
        self
    }

    pub fn kind(&self) -> &NetworkKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            NetworkKind::Quadratic(_) => "quadratic",
            NetworkKind::LowRank { .. } => "lowrank",
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        match &self.kind {
            NetworkKind::Quadratic(u) => u.len(),
            NetworkKind::LowRank { components, .. } => components.len(),
        }
    }

    pub fn omega(&self) -> usize {
        match &self.kind {
            NetworkKind::Quadratic(_) => 2,
            NetworkKind::LowRank { omega, .. } => *omega,
        }
    }

    /// Components per unit (`None` for quadratic networks).
    pub fn ell(&self) -> Option<usize> {
        match &self.kind {
            NetworkKind::Quadratic(_) => None,
            NetworkKind::LowRank { components, .. } => Some(components[0].len()),
        }
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn quadratic_units(&self) -> Option<&[DMatrix<f64>]> {
        match &self.kind {
            NetworkKind::Quadratic(u) => Some(u),
            NetworkKind::LowRank { .. } => None,
        }
    }

    pub fn components(&self) -> Option<&[Vec<DVector<f64>>]> {
        match &self.kind {
            NetworkKind::Quadratic(_) => None,
            NetworkKind::LowRank { components, .. } => Some(components),
        }
    }

    /// Unit tensor `T_a` on sorted indices.
    pub fn unit_tensor(&self, a: usize) -> Result<SymTensor> {
        if a >= self.d() {
            return Err(Error::domain(format!("unit {a} out of range")));
        }
        match &self.kind {
            NetworkKind::Quadratic(u) => SymTensor::from_matrix(&u[a]),
            NetworkKind::LowRank { omega, components } => SymTensor::from_components(&components[a], *omega),
        }
    }

    pub fn unit_dense(&self, a: usize) -> Result<DenseTensor> {
        self.unit_tensor(a)?.to_dense()
    }

    /// `R = max_a ‖T_a‖_F`.
    pub fn radius(&self) -> f64 {
        (0..self.d())
            .map(|a| match &self.kind {
                NetworkKind::Quadratic(u) => u[a].norm(),
                NetworkKind::LowRank { .. } => self.unit_tensor(a).map(|t| t.frobenius()).unwrap_or(f64::NAN),
            })
            .fold(0.0, f64::max)
    }

    /// Evaluate the network at one seed point.
    pub fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            NetworkKind::Quadratic(u) => DVector::from_iterator(u.len(), u.iter().map(|q| (q * x).dot(x))),
            NetworkKind::LowRank { omega, components } => DVector::from_iterator(
                components.len(),
                components
                    .iter()
                    .map(|unit| unit.iter().map(|v| v.dot(x).powi(*omega as i32)).sum::<f64>()),
            ),
        }
    }

    /// Same kind and shape as `other`.
    pub fn same_shape(&self, other: &PolyNetwork) -> bool {
        self.kind_name() == other.kind_name()
            && self.r == other.r
            && self.d() == other.d()
            && self.omega() == other.omega()
            && self.ell() == other.ell()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(&NetworkFile::from(self))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_json(path, &NetworkFile::from(self))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NetworkFile {
    Quadratic {
        r: usize,
        d: usize,
        #[serde(rename = "Q")]
        q: Vec<MatrixRepr>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
    },
    Lowrank {
        r: usize,
        d: usize,
        omega: usize,
        ell: usize,
        components: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
    },
}

impl From<&PolyNetwork> for NetworkFile {
    fn from(net: &PolyNetwork) -> Self {
        match &net.kind {
            NetworkKind::Quadratic(u) => NetworkFile::Quadratic {
                r: net.r,
                d: u.len(),
                q: u.iter().map(|m| MatrixRepr::Flat(crate::tensor_core::vec_matrix(m).iter().copied().collect())).collect(),
                rho: net.rho,
            },
            NetworkKind::LowRank { omega, components } => NetworkFile::Lowrank {
                r: net.r,
                d: components.len(),
                omega: *omega,
                ell: components[0].len(),
                components: components.iter().map(|u| u.iter().map(|v| v.iter().copied().collect()).collect()).collect(),
                rho: net.rho,
            },
        }
    }
}

impl TryFrom<NetworkFile> for PolyNetwork {
    type Error = Error;

    fn try_from(file: NetworkFile) -> Result<Self> {
        match file {
            NetworkFile::Quadratic { r, d, q, rho } => {
                if q.len() != d {
                    return Err(Error::Usage(format!("declared d={d} but found {} units", q.len())));
                }
                let units = q
                    .into_iter()
                    .map(|m| match m {
                        MatrixRepr::Flat(v) if v.len() == r * r => Ok(DMatrix::from_row_slice(r, r, &v)),
                        MatrixRepr::Rows(rows) if rows.len() == r && rows.iter().all(|x| x.len() == r) => {
                            Ok(DMatrix::from_fn(r, r, |i, j| rows[i][j]))
                        }
                        _ => Err(Error::Usage(format!("unit matrix is not {r}x{r}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PolyNetwork::quadratic(units)?.with_rho(rho))
            }
            NetworkFile::Lowrank { r, d, omega, ell, components, rho } => {
                if components.len() != d || components.iter().any(|u| u.len() != ell || u.iter().any(|v| v.len() != r)) {
                    return Err(Error::Usage("components do not match declared r, d, ell".into()));
                }
                let comps = components
                    .into_iter()
                    .map(|u| u.into_iter().map(DVector::from_vec).collect())
                    .collect();
                Ok(PolyNetwork::lowrank(omega, comps)?.with_rho(rho))
            }
        }
    }
}
