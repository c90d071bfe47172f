use nalgebra::DMatrix;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// A finite symmetric positive-semidefinite operator on `l^2({1..dim})` with
/// counting measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    label: String,
    matrix: DMatrix<f64>,
}

impl SymmetricOperator {
    /// Validates symmetry (relative tolerance `1e-12`) and positive
    /// semidefiniteness (smallest eigenvalue `>= -1e-10 * largest`).
    /// The stored matrix is the exact symmetric part of the input.
    pub fn new(label: impl Into<String>, matrix: DMatrix<f64>) -> Result<Self> {
        let label = label.into();
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Domain(format!(
                "operator `{label}` must be a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if let Some(v) = matrix.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("operator `{label}` has non-finite entry {v}")));
        }
        check_symmetric(&label, &matrix)?;
        let mut matrix = matrix;
        super::symmetrize(&mut matrix);
        if !gershgorin_nonnegative(&matrix) {
            let eig = matrix.clone().symmetric_eigenvalues();
            let max = eig.iter().cloned().fold(0.0_f64, f64::max);
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -PSD_TOL * max.max(f64::MIN_POSITIVE) {
                return Err(Error::NotPositive { label, eigenvalue: min });
            }
        }
        Ok(Self { label, matrix })
    }

    pub fn diagonal(label: impl Into<String>, values: &[f64]) -> Result<Self> {
        Self::new(label, DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn spectral_upper_bound(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn check_symmetric(label: &str, m: &DMatrix<f64>) -> Result<()> {
    let scale = super::max_abs(m);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let defect = (m[(i, j)] - m[(j, i)]).abs();
            if defect > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric { label: label.to_string(), i, j, defect });
            }
        }
    }
    Ok(())
}

// Every Gershgorin disc inside [0, inf) certifies PSD without diagonalizing.
fn gershgorin_nonnegative(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| {
        let off: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        m[(i, i)] - off >= 0.0
    })
}
