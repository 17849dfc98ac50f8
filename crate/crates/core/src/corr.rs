use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::Serialize;

use crate::error::{EsnError, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = -1e-10;
pub(crate) const JITTER: f64 = 1e-10;

/// Symmetric positive semi-definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    #[serde(serialize_with = "ser_matrix")]
    entries: DMatrix<f64>,
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    rows.serialize(s)
}

impl CorrelationMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if d == 0 || entries.ncols() != d {
            return Err(EsnError::InvalidCorrelation(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..d {
            if (entries[(i, i)] - 1.0).abs() > SYMMETRY_TOL {
                return Err(EsnError::InvalidCorrelation(format!(
                    "diagonal entry {i} is {}",
                    entries[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if !a.is_finite() || (a - b).abs() > SYMMETRY_TOL {
                    return Err(EsnError::InvalidCorrelation(format!(
                        "entries ({i},{j}) and ({j},{i}) differ: {a} vs {b}"
                    )));
                }
                if a.abs() > 1.0 {
                    return Err(EsnError::InvalidCorrelation(format!(
                        "entry ({i},{j}) = {a} outside [-1,1]"
                    )));
                }
            }
        }
        let mut sym = entries;
        for i in 0..d {
            sym[(i, i)] = 1.0;
            for j in 0..i {
                let v = 0.5 * (sym[(i, j)] + sym[(j, i)]);
                sym[(i, j)] = v;
                sym[(j, i)] = v;
            }
        }
        let min_eig = if d == 1 {
            1.0
        } else {
            sym.clone().symmetric_eigenvalues().min()
        };
        if min_eig < EIGEN_TOL {
            return Err(EsnError::InvalidCorrelation(format!(
                "not positive semi-definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { entries: sym })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            entries: DMatrix::identity(d, d),
        }
    }

    /// 2×2 matrix with off-diagonal `omega`.
    pub fn bivariate(omega: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[1.0, omega, omega, 1.0]))
    }

    /// Builds from the strict upper triangle in row order: (ω₁₂, ω₁₃, …, ω₂₃, …).
    pub fn from_upper(d: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != d * (d - 1) / 2 {
            return Err(EsnError::InvalidCorrelation(format!(
                "dimension {d} needs {} upper entries, got {}",
                d * (d - 1) / 2,
                upper.len()
            )));
        }
        let mut m = DMatrix::identity(d, d);
        let mut it = upper.iter();
        for i in 0..d {
            for j in i + 1..d {
                let v = *it.next().unwrap();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Principal sub-matrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let m = DMatrix::from_fn(k, k, |a, b| self.entries[(idx[a], idx[b])]);
        Self { entries: m }
    }

    /// Lower Cholesky factor, with a single diagonal jitter retry.
    pub fn cholesky(&self) -> Result<DMatrix<f64>> {
        cholesky_with_jitter(&self.entries)
    }
}

pub(crate) fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = Cholesky::<f64, Dyn>::new(m.clone()) {
        return Ok(c.l());
    }
    let n = m.nrows();
    let jittered = m + DMatrix::<f64>::identity(n, n) * JITTER;
    Cholesky::<f64, Dyn>::new(jittered)
        .map(|c| c.l())
        .ok_or_else(|| EsnError::SingularMatrix(format!("Cholesky failed for {n}x{n} matrix after jitter")))
}
