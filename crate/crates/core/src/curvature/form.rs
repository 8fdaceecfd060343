use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symmetric bilinear form on ℝⁿ (Ricci tensor, metric, Hessian).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricForm {
    entries: DMatrix<f64>,
}

impl SymmetricForm {
    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            entries: DMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 }),
        }
    }

    /// Symmetrizes `m` after checking it is symmetric to `1e-12` relative.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimMismatch(m.nrows(), m.ncols()));
        }
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * (1.0 + m.amax()) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let entries = (&m + m.transpose()) * 0.5;
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Frobenius inner product ⟨A,B⟩ = Σ A_ij B_ij.
    pub fn inner(&self, other: &Self) -> f64 {
        self.entries.dot(&other.entries)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.norm_squared()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: &self.entries * c,
        }
    }

    /// Quadratic form value `vᵀ A v`.
    pub fn quad(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.entries[(i, j)] * v[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            entries: &self.entries + &other.entries,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            entries: &self.entries - &other.entries,
        }
    }
}
