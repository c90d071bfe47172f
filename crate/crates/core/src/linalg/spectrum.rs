use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::SymmetricOperator;
use crate::error::{Error, Result};

/// Relative threshold under which eigenvalues are treated as exact zeros.
pub(crate) const ZERO_EIGEN_TOL: f64 = 1e-10;

/// Exact diagonalization `H = Q diag(eigenvalues) Q^T`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Relative spread under which eigenvalues are taken as one degenerate level.
pub(crate) const CLUSTER_TOL: f64 = 1e-12;

/// Gives every member of a roundoff-split degenerate level the same value,
/// so spectral cut-offs never separate an eigenspace. Levels containing 0 stay 0.
fn merge_clusters(values: &mut [f64], tol: f64) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        let level = if values[start] == 0.0 {
            0.0
        } else {
            values[start..end].iter().sum::<f64>() / (end - start) as f64
        };
        values[start..end].iter_mut().for_each(|v| *v = level);
        start = end;
    }
}

/// Iteration cap handed to the implicit QR sweep: `1000 + 100 * dim`.
fn iteration_cap(dim: usize) -> usize {
    1000 + 100 * dim
}

pub fn eigendecompose(h: &SymmetricOperator) -> Result<Spectrum> {
    let max_iter = iteration_cap(h.dim());
    let eig = h
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, max_iter)
        .ok_or_else(|| Error::NoConvergence { label: h.label().to_string(), max_iter })?;

    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda_max = order.last().map(|&i| eig.eigenvalues[i]).unwrap_or(0.0).max(0.0);
    let threshold = ZERO_EIGEN_TOL * lambda_max;

    let mut eigenvalues = Vec::with_capacity(h.dim());
    let mut eigenvectors = DMatrix::zeros(h.dim(), h.dim());
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvalues[i];
        if v < -threshold {
            return Err(Error::NotPositive { label: h.label().to_string(), eigenvalue: v });
        }
        if v.abs() <= threshold {
            v = 0.0;
        }
        eigenvalues.push(v);
        eigenvectors.set_column(col, &eig.eigenvectors.column(i));
    }
    merge_clusters(&mut eigenvalues, CLUSTER_TOL * lambda_max);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// `f(H)` through the eigen-oracle.
pub fn apply_function<F: Fn(f64) -> f64>(s: &Spectrum, f: F) -> Result<DMatrix<f64>> {
    s.apply(f)
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Smallest strictly positive eigenvalue, if any.
    pub fn lambda_min_positive(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().find(|&v| v > 0.0)
    }

    pub fn kernel_dim(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v == 0.0).count()
    }

    /// Distinct eigenvalue levels.
    pub fn distinct_eigenvalues(&self) -> Vec<f64> {
        let mut out = self.eigenvalues.clone();
        out.dedup();
        out
    }

    /// `Q diag(values) Q^T` for arbitrary real diagonal values.
    pub fn assemble(&self, values: &[f64]) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.eigenvectors[(i, j)] * values[j]
        });
        let mut out = scaled * self.eigenvectors.transpose();
        super::symmetrize(&mut out);
        out
    }

    /// `Q diag(values) Q^T` for complex diagonal values.
    pub fn assemble_complex(&self, values: &[Complex64]) -> DMatrix<Complex64> {
        let n = self.dim();
        let re = DVector::from_iterator(n, values.iter().map(|z| z.re));
        let im = DVector::from_iterator(n, values.iter().map(|z| z.im));
        let qt = self.eigenvectors.transpose();
        let part = |d: &DVector<f64>| {
            let scaled = DMatrix::from_fn(n, n, |i, j| self.eigenvectors[(i, j)] * d[j]);
            scaled * &qt
        };
        let (r, i) = (part(&re), part(&im));
        DMatrix::from_fn(n, n, |a, b| Complex64::new(r[(a, b)], i[(a, b)]))
    }

    /// `f(H) = Q f(diag) Q^T`; fails naming the first eigenvalue where `f` is not finite.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> Result<DMatrix<f64>> {
        let values = self.map_values(f)?;
        Ok(self.assemble(&values))
    }

    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&lambda| {
                let value = f(lambda);
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::NonFinite { eigenvalue: lambda, value })
                }
            })
            .collect()
    }

    /// Spectral projector onto the eigenvalues accepted by `pred`.
    pub fn projector<P: Fn(f64) -> bool>(&self, pred: P) -> DMatrix<f64> {
        let values: Vec<f64> =
            self.eigenvalues.iter().map(|&v| if pred(v) { 1.0 } else { 0.0 }).collect();
        self.assemble(&values)
    }

    pub fn kernel_projector(&self) -> DMatrix<f64> {
        self.projector(|v| v == 0.0)
    }

    /// `e^{-zH}` for complex time.
    pub fn complex_semigroup(&self, z: Complex64) -> DMatrix<Complex64> {
        let values: Vec<Complex64> = self.eigenvalues.iter().map(|&v| (-z * v).exp()).collect();
        self.assemble_complex(&values)
    }
}
