//! Dense symmetric linear algebra: operators, exact diagonalization, the heat
//! semigroup and its derivatives, and counting-measure `l^p -> l^q` norms.

mod generators;
mod io;
mod norm;
mod operator;
mod semigroup;
mod spectrum;

pub use generators::{
    fractional_power, parse_generator, parse_generator_capped, path_laplacian, torus_laplacian,
    sign_matrix, torus_laplacian_capped, DEFAULT_DIM_CAP,
};
pub use io::{read_matrix, read_matrix_file, write_matrix};
pub use norm::{
    conjugate, is_exact_pair, opnorm_complex, opnorm_p_q, opnorm_p_q_with, BoydOptions,
};
pub use operator::SymmetricOperator;
pub use semigroup::{
    complex_semigroup, heat_semigroup, semigroup_derivative, semigroup_derivative_scaled,
    ScaledMatrix,
};
pub use spectrum::{apply_function, eigendecompose, Spectrum};

use nalgebra::DMatrix;

/// Largest singular value of a symmetric matrix, i.e. its largest absolute eigenvalue.
pub fn symmetric_spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
